#include "oodkit/pipeline.hpp"

#include "oodkit/ensemble.hpp"
#include "oodkit/io.hpp"
#include "oodkit/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <utility>

namespace ood {

namespace fs = std::filesystem;

namespace {

// Sub-seed streams carved out of the pipeline seed.
enum SeedStream : std::uint64_t {
    kSeedTrain = 1,
    kSeedVal = 2,
    kSeedTest = 3,
    kSeedOodVal = 4,
    kSeedOodTest = 5,
    kSeedMlp = 6,
};

/// Everything needed to score any indicator on one sample.
struct ModelBundle {
    MlpModel mlp;
    OdinParams odin;
    int k = 10;
    GaussianClassModel mahalanobis;
    PcaClassModel pca;
    ConformanceModel conformance;
    FeatureDataset knn_reference;  // labeled penultimate features
};

/// Per-dataset scores of all six indicators, one entry per row.
struct ScoreSet {
    Vector sbp, odin, knn_entropy, conformance, mahalanobis, pca;
};

ScoreSet score_all(const ModelBundle& bundle, const FeatureDataset& inputs,
                   const FeatureDataset& feats) {
    const Eigen::Index n = inputs.rows();
    ScoreSet s;
    for (Vector* v : {&s.sbp, &s.odin, &s.knn_entropy, &s.conformance, &s.mahalanobis, &s.pca})
        v->resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector f = feats.features.row(i).transpose();
        s.sbp[i] = score_sbp(feats.softmax.row(i).transpose());
        s.odin[i] = score_odin(bundle.mlp, inputs.features.row(i).transpose(), bundle.odin);
        s.knn_entropy[i] = score_knn_label_entropy(bundle.knn_reference, f, bundle.k);
        s.conformance[i] = score_conformance(bundle.conformance, f);
        s.mahalanobis[i] = score_mahalanobis(bundle.mahalanobis, f);
        s.pca[i] = score_pca(bundle.pca, f);
    }
    return s;
}

Matrix two_cols(const Vector& a, const Vector& b) {
    Matrix m(a.size(), 2);
    m.col(0) = a;
    m.col(1) = b;
    return m;
}

Vector detector_scores(const DetectorComposition& det, const Vector& au, const Vector& eu) {
    Vector out(au.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = score_detector(det, au[i], eu[i]);
    return out;
}

/// Detectors + ensemble fitted against one choice of proxy-OOD scores.
struct ComposedModels {
    DetectorComposition detector1;  // odin (AU) + mahalanobis (EU)
    DetectorComposition detector2;  // conformance (AU) + pca (EU)
    EnsembleModel ensemble;
};

ComposedModels fit_chain(const ScoreSet& id_val, const ScoreSet& proxy_val) {
    // The second composition uses the dominating-uncertainty rule instead of
    // the learned combination: its constants come from iD quantiles alone, so
    // it is independent of which proxy-OOD sample is in hand, and a learned
    // fit there can shift all weight onto whichever channel separates the
    // proxy best and lose whole regions the weaker channel alone would have
    // flagged. The subspace channel acts as a tie-breaker (its threshold sits
    // at the top of the iD fit sample): it still dominates on far-away
    // inputs, where its score is enormous, but it cannot inflate the
    // neighborhood channel's effective threshold, which carries the
    // borderline clusters. The first composition keeps the learned
    // combination: its aleatoric channel saturates on a bounded scale, so a
    // quantile rule would leave borderline-OOD scores inside the iD tail,
    // while the learned fit compresses that tail enough for the downstream
    // weighting to trust the detector.
    DetectorFitOptions max_rule;
    max_rule.combiner = CombinerKind::MaxRule;
    max_rule.quantile_e = 0.999;
    ComposedModels chain;
    chain.detector1 = fit_detector("odin", "mahalanobis",
                                   two_cols(id_val.odin, id_val.mahalanobis),
                                   two_cols(proxy_val.odin, proxy_val.mahalanobis));
    chain.detector2 = fit_detector("conformance", "pca",
                                   two_cols(id_val.conformance, id_val.pca),
                                   two_cols(proxy_val.conformance, proxy_val.pca), max_rule);
    const auto det_pair = [&](const ScoreSet& s) {
        return two_cols(detector_scores(chain.detector1, s.odin, s.mahalanobis),
                        detector_scores(chain.detector2, s.conformance, s.pca));
    };
    chain.ensemble =
        fit_ensemble({"detector1", "detector2"}, det_pair(id_val), det_pair(proxy_val));
    return chain;
}

Vector ensemble_scores(const ComposedModels& chain, const ScoreSet& s) {
    const Vector d1 = detector_scores(chain.detector1, s.odin, s.mahalanobis);
    const Vector d2 = detector_scores(chain.detector2, s.conformance, s.pca);
    Vector out(d1.size());
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out[i] = score_ensemble(chain.ensemble, Eigen::Vector2d(d1[i], d2[i]));
    return out;
}

ToyRow make_row(std::string name, const Vector& id_scores, const Vector& ood_scores,
                const Eigen::VectorXi& ood_cluster, double tpr_target) {
    ToyRow row;
    row.name = std::move(name);
    row.overall = evaluate(id_scores, ood_scores, tpr_target);
    for (int c = 0; c < 3; ++c) {
        std::vector<ScoredSample> samples;
        samples.reserve(static_cast<std::size_t>(id_scores.size() + ood_scores.size()));
        for (Eigen::Index i = 0; i < id_scores.size(); ++i)
            samples.push_back({id_scores[i], false});
        for (Eigen::Index i = 0; i < ood_scores.size(); ++i)
            if (ood_cluster[i] == c) samples.push_back({ood_scores[i], true});
        row.cluster_tnr[static_cast<std::size_t>(c)] = tnr_at_tpr(samples, tpr_target);
    }
    return row;
}

std::vector<ScoreRow> as_score_rows(const std::vector<std::string>& ids, const Vector& scores) {
    std::vector<ScoreRow> rows(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
        rows[i] = {ids[i], scores[static_cast<Eigen::Index>(i)]};
    return rows;
}

double sample_std(const std::vector<double>& values, double mean) {
    if (values.size() < 2) return 0.0;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace

const ToyRow* ToyPipelineResult::find(const std::string& name) const {
    for (const ToyRow& row : indicators)
        if (row.name == name) return &row;
    for (const ToyRow* row : {&detector1, &detector2, &ensemble, &ensemble_fgsm})
        if (row->name == name) return row;
    return nullptr;
}

ToyPipelineResult run_toy_pipeline(const ToyPipelineConfig& cfg,
                                   const std::optional<fs::path>& out_dir) {
    // --- data ---------------------------------------------------------------
    ToyConfig base;
    base.noise_sigma = cfg.noise_sigma;
    base.cluster_centers = cfg.cluster_centers;
    base.cluster_sigmas = cfg.cluster_sigmas;

    const auto moons = [&](Eigen::Index n_per_class, std::uint64_t stream) {
        ToyConfig tc = base;
        tc.n_id_per_class = n_per_class;
        tc.seed = mix_seed(cfg.seed, stream);
        return half_moons(tc);
    };
    const auto clusters = [&](Eigen::Index n_per_cluster, std::uint64_t stream) {
        ToyConfig tc = base;
        tc.n_ood_per_cluster = n_per_cluster;
        tc.seed = mix_seed(cfg.seed, stream);
        return ood_clusters(tc);
    };

    const FeatureDataset id_train = moons(cfg.n_train_per_class, kSeedTrain);
    const FeatureDataset id_val = moons(cfg.n_val_per_class, kSeedVal);
    const FeatureDataset id_test = moons(cfg.n_test_per_class, kSeedTest);
    const FeatureDataset ood_val = clusters(cfg.n_ood_val_per_cluster, kSeedOodVal);
    const FeatureDataset ood_test = clusters(cfg.n_ood_test_per_cluster, kSeedOodTest);

    // --- classifier ----------------------------------------------------------
    TrainConfig train_cfg = cfg.train_cfg;
    train_cfg.seed = mix_seed(cfg.seed, kSeedMlp);
    const TrainResult trained = train(id_train, cfg.arch, train_cfg);

    const FeatureDataset fgsm_val = fgsm_dataset(trained.model, id_val, cfg.fgsm_epsilon);

    const FeatureDataset feat_train = extract_features(trained.model, id_train);
    const FeatureDataset feat_val = extract_features(trained.model, id_val);
    const FeatureDataset feat_test = extract_features(trained.model, id_test);
    const FeatureDataset feat_ood_val = extract_features(trained.model, ood_val);
    const FeatureDataset feat_ood_test = extract_features(trained.model, ood_test);
    const FeatureDataset feat_fgsm_val = extract_features(trained.model, fgsm_val);

    // --- indicator models ----------------------------------------------------
    ModelBundle bundle;
    bundle.mlp = trained.model;
    bundle.odin = cfg.odin;
    bundle.k = cfg.k;
    bundle.mahalanobis = fit_mahalanobis(feat_train);
    bundle.pca = fit_pca(feat_train, cfg.retained_fraction);
    bundle.conformance = fit_conformance(feat_train, cfg.k);
    bundle.knn_reference = feat_train;

    const ScoreSet s_id_val = score_all(bundle, id_val, feat_val);
    const ScoreSet s_id_test = score_all(bundle, id_test, feat_test);
    const ScoreSet s_ood_val = score_all(bundle, ood_val, feat_ood_val);
    const ScoreSet s_ood_test = score_all(bundle, ood_test, feat_ood_test);
    const ScoreSet s_fgsm_val = score_all(bundle, fgsm_val, feat_fgsm_val);

    // --- composition ----------------------------------------------------------
    const ComposedModels chain = fit_chain(s_id_val, s_ood_val);
    const ComposedModels chain_fgsm = fit_chain(s_id_val, s_fgsm_val);

    ToyPipelineResult result;
    result.train_accuracy = trained.train_accuracy;

    struct Named {
        const char* name;
        Vector ScoreSet::* member;
    };
    constexpr Named kIndicators[] = {
        {"sbp", &ScoreSet::sbp},
        {"odin", &ScoreSet::odin},
        {"knn_entropy", &ScoreSet::knn_entropy},
        {"conformance", &ScoreSet::conformance},
        {"mahalanobis", &ScoreSet::mahalanobis},
        {"pca", &ScoreSet::pca},
    };
    for (const Named& ind : kIndicators)
        result.indicators.push_back(make_row(ind.name, s_id_test.*ind.member,
                                             s_ood_test.*ind.member, ood_test.cluster,
                                             cfg.tpr_target));

    const Vector d1_id = detector_scores(chain.detector1, s_id_test.odin, s_id_test.mahalanobis);
    const Vector d1_ood =
        detector_scores(chain.detector1, s_ood_test.odin, s_ood_test.mahalanobis);
    const Vector d2_id =
        detector_scores(chain.detector2, s_id_test.conformance, s_id_test.pca);
    const Vector d2_ood =
        detector_scores(chain.detector2, s_ood_test.conformance, s_ood_test.pca);
    result.detector1 = make_row("detector1", d1_id, d1_ood, ood_test.cluster, cfg.tpr_target);
    result.detector2 = make_row("detector2", d2_id, d2_ood, ood_test.cluster, cfg.tpr_target);

    const Vector ens_id = ensemble_scores(chain, s_id_test);
    const Vector ens_ood = ensemble_scores(chain, s_ood_test);
    result.ensemble = make_row("ensemble", ens_id, ens_ood, ood_test.cluster, cfg.tpr_target);

    const Vector ensf_id = ensemble_scores(chain_fgsm, s_id_test);
    const Vector ensf_ood = ensemble_scores(chain_fgsm, s_ood_test);
    result.ensemble_fgsm =
        make_row("ensemble_fgsm", ensf_id, ensf_ood, ood_test.cluster, cfg.tpr_target);

    // --- artifacts ------------------------------------------------------------
    if (out_dir) {
        const fs::path& dir = *out_dir;
        write_features(id_train, dir / "data" / "id_train.csv");
        write_features(id_val, dir / "data" / "id_val.csv");
        write_features(id_test, dir / "data" / "id_test.csv");
        write_features(ood_val, dir / "data" / "ood_val.csv");
        write_features(ood_test, dir / "data" / "ood_test.csv");
        write_features(fgsm_val, dir / "data" / "fgsm_val.csv");

        write_features(feat_train, dir / "features" / "train.csv");
        write_features(feat_val, dir / "features" / "val.csv");
        write_features(feat_test, dir / "features" / "test.csv");
        write_features(feat_ood_val, dir / "features" / "ood_val.csv");
        write_features(feat_ood_test, dir / "features" / "ood_test.csv");
        write_features(feat_fgsm_val, dir / "features" / "fgsm_val.csv");

        const fs::path models = dir / "models";
        write_model(mlp_to_json(trained.model), models / "mlp.json");
        write_model(mahalanobis_to_json(bundle.mahalanobis), models / "mahalanobis.json");
        write_model(pca_to_json(bundle.pca), models / "pca.json");
        write_features(feat_train, models / "reference.csv");
        const std::string ref_hash = file_content_hash(models / "reference.csv");
        write_model(conformance_to_json(bundle.conformance, "reference.csv", ref_hash),
                    models / "conformance.json");
        write_model(knn_entropy_to_json({bundle.k, bundle.knn_reference}, "reference.csv", ref_hash),
                    models / "knn_entropy.json");
        write_model(detector_to_json(chain.detector1), models / "detector1.json");
        write_model(detector_to_json(chain.detector2), models / "detector2.json");
        write_model(ensemble_to_json(chain.ensemble), models / "ensemble.json");
        write_model(detector_to_json(chain_fgsm.detector1), models / "detector1_fgsm.json");
        write_model(detector_to_json(chain_fgsm.detector2), models / "detector2_fgsm.json");
        write_model(ensemble_to_json(chain_fgsm.ensemble), models / "ensemble_fgsm.json");

        const fs::path scores = dir / "scores";
        for (const Named& ind : kIndicators) {
            write_scores(as_score_rows(id_test.ids, s_id_test.*ind.member),
                         scores / (std::string(ind.name) + "_id_test.csv"));
            write_scores(as_score_rows(ood_test.ids, s_ood_test.*ind.member),
                         scores / (std::string(ind.name) + "_ood_test.csv"));
        }
        write_scores(as_score_rows(id_test.ids, d1_id), scores / "detector1_id_test.csv");
        write_scores(as_score_rows(ood_test.ids, d1_ood), scores / "detector1_ood_test.csv");
        write_scores(as_score_rows(id_test.ids, d2_id), scores / "detector2_id_test.csv");
        write_scores(as_score_rows(ood_test.ids, d2_ood), scores / "detector2_ood_test.csv");
        write_scores(as_score_rows(id_test.ids, ens_id), scores / "ensemble_id_test.csv");
        write_scores(as_score_rows(ood_test.ids, ens_ood), scores / "ensemble_ood_test.csv");
        write_scores(as_score_rows(id_test.ids, ensf_id), scores / "ensemble_fgsm_id_test.csv");
        write_scores(as_score_rows(ood_test.ids, ensf_ood), scores / "ensemble_fgsm_ood_test.csv");

        const fs::path reports = dir / "reports";
        for (const ToyRow& row : result.indicators)
            write_report(row.overall, reports / (row.name + ".json"));
        for (const ToyRow* row :
             {&result.detector1, &result.detector2, &result.ensemble, &result.ensemble_fgsm})
            write_report(row->overall, reports / (row->name + ".json"));

        const std::string summary = toy_summary_table({result}, ProxyMode::RealOod, cfg.tpr_target) +
                                    "\n" +
                                    toy_summary_table({result}, ProxyMode::Fgsm, cfg.tpr_target);
        std::ofstream out(dir / "summary.txt", std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + (dir / "summary.txt").string());
        out << summary;
    }
    return result;
}

std::string toy_summary_table(const std::vector<ToyPipelineResult>& results, ProxyMode proxy,
                              double tpr_target) {
    if (results.empty()) throw std::invalid_argument("toy_summary_table: no results");

    const std::vector<std::string> names = {
        "sbp",       "odin",      "knn_entropy", "conformance", "mahalanobis",
        "pca",       "detector1", "detector2",
        proxy == ProxyMode::Fgsm ? "ensemble_fgsm" : "ensemble",
    };

    char line[256];
    std::string out;
    std::snprintf(line, sizeof line,
                  "half-moon study: %zu seed(s), TPR target %.2f, proxy for fitting: %s\n",
                  results.size(), tpr_target, proxy == ProxyMode::Fgsm ? "fgsm" : "real-ood");
    out += line;
    std::snprintf(line, sizeof line, "%-14s %-13s %-13s %-13s %-13s %-13s %-13s %-13s %-13s\n",
                  "name", "TNR@TPR", "AUROC", "DTACC", "AUPR-IN", "AUPR-OUT", "TNR-A", "TNR-B",
                  "TNR-C");
    out += line;

    for (const std::string& name : names) {
        std::vector<const ToyRow*> rows;
        for (const ToyPipelineResult& result : results) {
            const ToyRow* row = result.find(name);
            if (!row) throw std::invalid_argument("toy_summary_table: missing row " + name);
            rows.push_back(row);
        }
        const auto cell = [&](auto&& metric) {
            std::vector<double> values;
            values.reserve(rows.size());
            for (const ToyRow* row : rows) values.push_back(metric(*row));
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= static_cast<double>(values.size());
            char buffer[32];
            std::snprintf(buffer, sizeof buffer, "%.3f+-%.3f", mean, sample_std(values, mean));
            return std::string(buffer);
        };
        std::snprintf(
            line, sizeof line, "%-14s %-13s %-13s %-13s %-13s %-13s %-13s %-13s %-13s\n",
            name.c_str(),
            cell([](const ToyRow& r) { return r.overall.tnr_at_tpr95; }).c_str(),
            cell([](const ToyRow& r) { return r.overall.auroc; }).c_str(),
            cell([](const ToyRow& r) { return r.overall.dtacc; }).c_str(),
            cell([](const ToyRow& r) { return r.overall.aupr_in; }).c_str(),
            cell([](const ToyRow& r) { return r.overall.aupr_out; }).c_str(),
            cell([](const ToyRow& r) { return r.cluster_tnr[0]; }).c_str(),
            cell([](const ToyRow& r) { return r.cluster_tnr[1]; }).c_str(),
            cell([](const ToyRow& r) { return r.cluster_tnr[2]; }).c_str());
        out += line;
    }
    return out;
}

}  // namespace ood

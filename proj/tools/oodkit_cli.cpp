// Command-line front end for the OOD detection toolkit.
//
// Subcommands cover the full workflow: generate the two-moons benchmark,
// train the classifier, extract features, run the FGSM attack, fit and apply
// individual uncertainty indicators, compose them into detectors, combine
// detectors into an ensemble, evaluate score files, and rerun the packaged
// toy study end to end.
//
// Conventions shared by every subcommand:
//   * long flags only; each command accepts --config FILE, a flat JSON object
//     whose keys are the command's flag names (command-line flags override it)
//   * all randomness derives from --seed
//   * exit code 0 on success, 2 on usage errors, 3 on data or runtime errors
//   * the resolved configuration, defaults included, is printed before work

#include "oodkit/io.hpp"
#include "oodkit/pipeline.hpp"
#include "oodkit/rng.hpp"
#include "oodkit/toy.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised for misuse detectable before touching any data files; maps to exit 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// JSON config files: an object of per-subcommand sections, each holding
// flag-name -> value pairs, e.g. {"gen-toy": {"seed": 7, "n-id": 100}}.
// Values from the file fill options the command line left unset.

class JsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            input >> j;
        } catch (const json::exception& e) {
            throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!j.is_object())
            throw CLI::FileError("config must be a JSON object of per-command sections");
        std::vector<CLI::ConfigItem> items;
        for (const auto& [section, body] : j.items()) {
            if (!body.is_object())
                throw CLI::FileError("config section '" + section +
                                     "' must be an object of flag settings");
            for (const auto& [key, value] : body.items()) {
                CLI::ConfigItem item;
                item.parents = {section};
                item.name = key;
                if (value.is_array()) {
                    for (const auto& entry : value) item.inputs.push_back(render(entry));
                } else {
                    item.inputs.push_back(render(value));
                }
                items.push_back(std::move(item));
            }
        }
        return items;
    }

  private:
    static std::string render(const json& value) {
        if (value.is_string()) return value.get<std::string>();
        if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
        if (value.is_object() || value.is_array())
            throw CLI::FileError("config values must be scalars or arrays of scalars");
        return value.dump();
    }
};

// ---------------------------------------------------------------------------
// Resolved-config printing.

std::string fmt_num(double v) {
    if (std::isnan(v)) return "auto";
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

using KV = std::vector<std::pair<std::string, std::string>>;

void print_config(const std::string& command, const KV& kv) {
    std::cout << "resolved config (" << command << "):\n";
    for (const auto& [key, value] : kv) std::cout << "  --" << key << " = " << value << "\n";
}

// ---------------------------------------------------------------------------
// Small shared helpers.

std::vector<int> parse_arch(const std::string& text) {
    std::vector<int> sizes;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(tok, &used);
            if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
            sizes.push_back(v);
        } catch (const std::exception&) {
            throw UsageError("--arch must be a comma-separated list of positive layer sizes, got '" +
                             text + "'");
        }
    }
    if (sizes.size() < 2)
        throw UsageError("--arch needs at least an input and an output layer, got '" + text + "'");
    return sizes;
}

// Loads a score CSV and checks it lines up row-for-row with the ids seen in
// `expect` (when non-empty). Mismatched files almost always mean two score
// files from different datasets were paired up.
std::vector<ood::ScoreRow> read_aligned_scores(const fs::path& path,
                                               const std::vector<std::string>& expect,
                                               const std::string& role) {
    std::vector<ood::ScoreRow> rows = ood::read_scores(path);
    if (!expect.empty()) {
        if (rows.size() != expect.size())
            throw std::runtime_error(role + " file " + path.string() + " has " +
                                     std::to_string(rows.size()) + " rows, expected " +
                                     std::to_string(expect.size()) +
                                     " to match the first channel");
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (rows[i].id != expect[i])
                throw std::runtime_error(role + " file " + path.string() + " row " +
                                         std::to_string(i) + " has id '" + rows[i].id +
                                         "' but the first channel has '" + expect[i] +
                                         "'; score files must describe the same rows in order");
    }
    return rows;
}

std::vector<std::string> ids_of(const std::vector<ood::ScoreRow>& rows) {
    std::vector<std::string> ids;
    ids.reserve(rows.size());
    for (const auto& r : rows) ids.push_back(r.id);
    return ids;
}

ood::Matrix score_columns(const std::vector<std::vector<ood::ScoreRow>>& channels) {
    ood::Matrix m(static_cast<Eigen::Index>(channels.front().size()),
                  static_cast<Eigen::Index>(channels.size()));
    for (std::size_t c = 0; c < channels.size(); ++c)
        for (std::size_t r = 0; r < channels[c].size(); ++r)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = channels[c][r].score;
    return m;
}

void write_score_file(const std::vector<std::string>& ids, const ood::Vector& scores,
                      const fs::path& path) {
    std::vector<ood::ScoreRow> rows(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
        rows[i] = {ids[i], scores[static_cast<Eigen::Index>(i)]};
    ood::write_scores(rows, path);
}

void summarize_scores(const ood::Vector& s) {
    if (s.size() == 0) {
        std::cout << "wrote 0 scores\n";
        return;
    }
    std::cout << "wrote " << s.size() << " scores  (mean " << fmt_num(s.mean()) << ", min "
              << fmt_num(s.minCoeff()) << ", max " << fmt_num(s.maxCoeff()) << ")\n";
}

// Gradient-based methods need the classifier's raw input coordinates; files
// that already carry softmax columns hold extracted features or externally
// ingested scores, where no input-space gradient exists.
void require_raw_inputs(const ood::FeatureDataset& data, const std::string& what) {
    if (data.has_softmax())
        throw std::runtime_error(
            what + " needs the classifier's raw inputs, but this file already contains "
                   "softmax columns (extracted or externally ingested features); "
                   "rerun it on the original input CSV");
}

json load_model_of_kind(const fs::path& path, const std::string& kind, const std::string& flag) {
    json model = ood::read_model(path);
    const std::string found = ood::model_kind(model);
    if (found != kind)
        throw std::runtime_error(flag + " expects a '" + kind + "' model, but " + path.string() +
                                 " holds '" + found + "'");
    return model;
}

// ---------------------------------------------------------------------------
// gen-toy

struct GenToyOpts {
    fs::path out;
    std::uint64_t seed = 0;
    Eigen::Index n_id = 500;
    Eigen::Index n_val = 250;
    Eigen::Index n_test = 500;
    Eigen::Index n_ood = 200;
    Eigen::Index n_ood_val = 100;
    double noise = 0.1;
};

void run_gen_toy(const GenToyOpts& o) {
    print_config("gen-toy", {{"out", o.out.string()},
                             {"seed", std::to_string(o.seed)},
                             {"n-id", std::to_string(o.n_id)},
                             {"n-val", std::to_string(o.n_val)},
                             {"n-test", std::to_string(o.n_test)},
                             {"n-ood", std::to_string(o.n_ood)},
                             {"n-ood-val", std::to_string(o.n_ood_val)},
                             {"noise", fmt_num(o.noise)}});

    ood::ToyConfig base;
    base.noise_sigma = o.noise;

    auto moons = [&](Eigen::Index n_per_class, std::uint64_t stream) {
        ood::ToyConfig c = base;
        c.n_id_per_class = n_per_class;
        c.seed = ood::mix_seed(o.seed, stream);
        return ood::half_moons(c);
    };
    auto clusters = [&](Eigen::Index n_per_cluster, std::uint64_t stream) {
        ood::ToyConfig c = base;
        c.n_ood_per_cluster = n_per_cluster;
        c.seed = ood::mix_seed(o.seed, stream);
        return ood::ood_clusters(c);
    };

    const ood::FeatureDataset id_train = moons(o.n_id, 1);
    const ood::FeatureDataset id_val = moons(o.n_val, 2);
    const ood::FeatureDataset id_test = moons(o.n_test, 3);
    const ood::FeatureDataset ood_val = clusters(o.n_ood_val, 4);
    const ood::FeatureDataset ood_test = clusters(o.n_ood, 5);

    std::cout << "files written:\n";
    auto emit = [&](const std::string& name, const ood::FeatureDataset& d) {
        const fs::path path = o.out / name;
        ood::write_features(d, path);
        std::cout << "  " << path.string() << "  (" << d.rows() << " rows)\n";
    };
    emit("id_train.csv", id_train);
    emit("id_val.csv", id_val);
    emit("id_test.csv", id_test);
    emit("ood_val.csv", ood_val);
    emit("ood_test.csv", ood_test);

    const std::array<std::string, 3> tags = {"ood_a.csv", "ood_b.csv", "ood_c.csv"};
    for (int c = 0; c < 3; ++c) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < ood_test.rows(); ++i)
            if (ood_test.cluster[i] == c) rows.push_back(i);
        emit(tags[static_cast<std::size_t>(c)], ood_test.select(rows));
    }
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
    fs::path data;
    fs::path out;
    std::string arch = "2,50,2,2";
    int epochs = 300;
    int batch = 32;
    double lr = 0.05;
    double l2 = 0.0;
    std::uint64_t seed = 0;
};

void run_train(const TrainOpts& o) {
    print_config("train", {{"data", o.data.string()},
                           {"out", o.out.string()},
                           {"arch", o.arch},
                           {"epochs", std::to_string(o.epochs)},
                           {"batch", std::to_string(o.batch)},
                           {"lr", fmt_num(o.lr)},
                           {"l2", fmt_num(o.l2)},
                           {"seed", std::to_string(o.seed)}});

    const std::vector<int> arch = parse_arch(o.arch);
    ood::FeatureDataset data = ood::read_features(o.data);
    require_raw_inputs(data, "training");
    const auto labeled = data.labeled_rows();
    if (labeled.empty()) throw std::runtime_error("no labeled rows in " + o.data.string());
    if (static_cast<Eigen::Index>(labeled.size()) != data.rows()) data = data.select(labeled);
    if (arch.front() != static_cast<int>(data.dim()))
        throw std::runtime_error("--arch input width " + std::to_string(arch.front()) +
                                 " does not match the data dimension " +
                                 std::to_string(data.dim()));

    ood::TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch;
    cfg.learning_rate = o.lr;
    cfg.l2_penalty = o.l2;
    cfg.seed = o.seed;
    const ood::TrainResult result = ood::train(data, arch, cfg);
    ood::write_model(ood::mlp_to_json(result.model), o.out);
    std::cout << "trained on " << data.rows() << " rows: accuracy " << fmt_num(result.train_accuracy)
              << ", final loss " << fmt_num(result.final_loss) << "\n"
              << "model written to " << o.out.string() << "\n";
}

// ---------------------------------------------------------------------------
// extract

struct ExtractOpts {
    fs::path model;
    fs::path data;
    fs::path out;
};

void run_extract(const ExtractOpts& o) {
    print_config("extract", {{"model", o.model.string()},
                             {"data", o.data.string()},
                             {"out", o.out.string()}});
    const ood::MlpModel mlp = ood::mlp_from_json(load_model_of_kind(o.model, "mlp", "--model"));
    const ood::FeatureDataset data = ood::read_features(o.data);
    require_raw_inputs(data, "feature extraction");
    const ood::FeatureDataset features = ood::extract_features(mlp, data);
    ood::write_features(features, o.out);
    std::cout << "extracted " << features.rows() << " rows (" << features.dim()
              << " features + " << features.softmax.cols() << " softmax columns) to "
              << o.out.string() << "\n";
}

// ---------------------------------------------------------------------------
// attack-fgsm

struct AttackOpts {
    fs::path model;
    fs::path data;
    fs::path out;
    double epsilon = 0.2;
};

void run_attack(const AttackOpts& o) {
    print_config("attack-fgsm", {{"model", o.model.string()},
                                 {"data", o.data.string()},
                                 {"out", o.out.string()},
                                 {"epsilon", fmt_num(o.epsilon)}});
    const ood::MlpModel mlp = ood::mlp_from_json(load_model_of_kind(o.model, "mlp", "--model"));
    const ood::FeatureDataset data = ood::read_features(o.data);
    require_raw_inputs(data, "the FGSM attack");
    const ood::FeatureDataset attacked = ood::fgsm_dataset(mlp, data, o.epsilon);
    ood::write_features(attacked, o.out);
    std::cout << "perturbed " << attacked.rows() << " rows with step " << fmt_num(o.epsilon)
              << " to " << o.out.string() << "\n";
}

// ---------------------------------------------------------------------------
// fit

struct FitOpts {
    std::string kind;
    fs::path data;
    fs::path out;
    std::string covariance = "tied";
    double retained_fraction = 0.4;
    int k = 10;
    std::string deviation = "signed";
    bool renormalize = false;
    bool select_k = false;
    fs::path id_val;
    fs::path ood_val;
    double tpr = 0.95;
};

ood::DeviationKind deviation_of(const std::string& name) {
    return name == "abs" ? ood::DeviationKind::MeanAbsolute : ood::DeviationKind::SignedMean;
}

// Writes the labeled reference rows next to the model and returns the
// (relative path, content hash) pair recorded inside it. Reference-based
// models reload only if the file still hashes the same.
std::pair<std::string, std::string> write_reference(const ood::FeatureDataset& data,
                                                    const fs::path& model_out) {
    fs::path ref = model_out;
    ref.replace_extension();
    ref += "_reference.csv";
    ood::write_features(data, ref);
    std::cout << "reference data written to " << ref.string() << "\n";
    return {ref.filename().string(), ood::file_content_hash(ref)};
}

void run_fit(const FitOpts& o) {
    print_config("fit", {{"kind", o.kind},
                         {"data", o.data.string()},
                         {"out", o.out.string()},
                         {"covariance", o.covariance},
                         {"retained-fraction", fmt_num(o.retained_fraction)},
                         {"k", std::to_string(o.k)},
                         {"deviation", o.deviation},
                         {"renormalize", o.renormalize ? "true" : "false"},
                         {"select-k", o.select_k ? "true" : "false"},
                         {"id-val", o.id_val.string()},
                         {"ood-val", o.ood_val.string()},
                         {"tpr", fmt_num(o.tpr)}});

    const ood::FeatureDataset data = ood::read_features(o.data, o.renormalize);
    const bool reference_based = o.kind == "conformance" || o.kind == "knn-entropy";
    if (o.select_k && !reference_based)
        throw UsageError("--select-k applies only to the neighborhood indicators "
                         "(conformance, knn-entropy)");

    int k = o.k;
    if (o.select_k) {
        const ood::FeatureDataset idv = ood::read_features(o.id_val, o.renormalize);
        const ood::FeatureDataset oodv = ood::read_features(o.ood_val, o.renormalize);
        auto tnr_for = [&](int candidate) {
            auto score_with = [&](const ood::FeatureDataset& d) {
                ood::Vector s(d.rows());
                if (o.kind == "conformance") {
                    const ood::ConformanceModel m =
                        ood::fit_conformance(data, candidate, deviation_of(o.deviation));
                    for (Eigen::Index i = 0; i < d.rows(); ++i)
                        s[i] = ood::score_conformance(m, d.features.row(i).transpose());
                } else {
                    for (Eigen::Index i = 0; i < d.rows(); ++i)
                        s[i] = ood::score_knn_label_entropy(data, d.features.row(i).transpose(),
                                                            candidate);
                }
                return s;
            };
            return ood::evaluate(score_with(idv), score_with(oodv), o.tpr).tnr_at_tpr95;
        };
        std::cout << "neighborhood size selection (validation TNR at TPR " << fmt_num(o.tpr)
                  << "):\n";
        double best = -1.0;
        for (const int candidate : {10, 20, 30, 40, 50}) {
            const double tnr = tnr_for(candidate);
            std::cout << "  k = " << candidate << "  tnr = " << fmt_num(tnr) << "\n";
            if (tnr > best) {
                best = tnr;
                k = candidate;
            }
        }
        std::cout << "selected k = " << k << "\n";
    }

    json model;
    if (o.kind == "mahalanobis") {
        const auto mode =
            o.covariance == "per-class" ? ood::CovarianceMode::PerClass : ood::CovarianceMode::Tied;
        model = ood::mahalanobis_to_json(ood::fit_mahalanobis(data, mode));
    } else if (o.kind == "pca") {
        model = ood::pca_to_json(ood::fit_pca(data, o.retained_fraction));
    } else if (o.kind == "conformance") {
        const ood::ConformanceModel fitted = ood::fit_conformance(data, k, deviation_of(o.deviation));
        const auto [ref_path, ref_hash] = write_reference(data, o.out);
        model = ood::conformance_to_json(fitted, ref_path, ref_hash);
    } else {  // knn-entropy
        const auto labeled = data.labeled_rows();
        if (labeled.empty())
            throw std::runtime_error("knn-entropy needs labeled reference rows, but " +
                                     o.data.string() + " has none");
        const ood::FeatureDataset reference =
            static_cast<Eigen::Index>(labeled.size()) == data.rows() ? data : data.select(labeled);
        const auto [ref_path, ref_hash] = write_reference(reference, o.out);
        model = ood::knn_entropy_to_json({k, reference}, ref_path, ref_hash);
    }
    ood::write_model(model, o.out);
    std::cout << "model written to " << o.out.string() << "\n";
}

// ---------------------------------------------------------------------------
// score

struct ScoreOpts {
    fs::path model;
    fs::path data;
    fs::path out;
    std::string indicator;
    double odin_eps = 0.005;
    double odin_temp = 10.0;
    bool renormalize = false;
};

void run_score(const ScoreOpts& o) {
    print_config("score", {{"model", o.model.string()},
                           {"data", o.data.string()},
                           {"out", o.out.string()},
                           {"indicator", o.indicator.empty() ? "(none)" : o.indicator},
                           {"odin-eps", fmt_num(o.odin_eps)},
                           {"odin-temp", fmt_num(o.odin_temp)},
                           {"renormalize", o.renormalize ? "true" : "false"}});

    const ood::FeatureDataset data = ood::read_features(o.data, o.renormalize);
    ood::Vector scores(data.rows());

    if (o.model.empty()) {
        // Model-free path: softmax-derived indicators straight from stored
        // probability columns, e.g. features ingested from an external system.
        if (o.indicator != "sbp" && o.indicator != "entropy")
            throw UsageError("without --model, --indicator must be sbp or entropy "
                             "(computed from stored softmax columns)");
        if (!data.has_softmax())
            throw std::runtime_error(o.data.string() +
                                     " has no softmax columns; pass --model to score raw inputs");
        for (Eigen::Index i = 0; i < data.rows(); ++i)
            scores[i] = o.indicator == "sbp" ? ood::score_sbp(data.softmax.row(i).transpose())
                                             : ood::score_entropy(data.softmax.row(i).transpose());
    } else {
        const json model = ood::read_model(o.model);
        const std::string kind = ood::model_kind(model);
        if (kind == "mlp") {
            if (o.indicator.empty())
                throw UsageError("--indicator {sbp,entropy,odin} is required with an mlp model");
            const ood::MlpModel mlp = ood::mlp_from_json(model);
            if (o.indicator == "odin") {
                require_raw_inputs(data, "the odin indicator (it perturbs inputs along the "
                                         "loss gradient)");
                const ood::OdinParams params{o.odin_eps, o.odin_temp};
                for (Eigen::Index i = 0; i < data.rows(); ++i)
                    scores[i] = ood::score_odin(mlp, data.features.row(i).transpose(), params);
            } else {
                require_raw_inputs(data, "scoring through an mlp model");
                for (Eigen::Index i = 0; i < data.rows(); ++i) {
                    const ood::Vector p =
                        ood::forward(mlp, data.features.row(i).transpose()).softmax;
                    scores[i] = o.indicator == "sbp" ? ood::score_sbp(p) : ood::score_entropy(p);
                }
            }
        } else if (kind == "mahalanobis") {
            const ood::GaussianClassModel m = ood::mahalanobis_from_json(model);
            for (Eigen::Index i = 0; i < data.rows(); ++i)
                scores[i] = ood::score_mahalanobis(m, data.features.row(i).transpose());
        } else if (kind == "pca") {
            const ood::PcaClassModel m = ood::pca_from_json(model);
            for (Eigen::Index i = 0; i < data.rows(); ++i)
                scores[i] = ood::score_pca(m, data.features.row(i).transpose());
        } else if (kind == "conformance") {
            const ood::ConformanceModel m =
                ood::conformance_from_json(model, o.model.parent_path());
            for (Eigen::Index i = 0; i < data.rows(); ++i)
                scores[i] = ood::score_conformance(m, data.features.row(i).transpose());
        } else if (kind == "knn_entropy") {
            const ood::KnnEntropyModel m =
                ood::knn_entropy_from_json(model, o.model.parent_path());
            for (Eigen::Index i = 0; i < data.rows(); ++i)
                scores[i] =
                    ood::score_knn_label_entropy(m.reference, data.features.row(i).transpose(), m.k);
        } else if (kind == "detector" || kind == "ensemble") {
            throw UsageError("use score-" + kind + " for '" + kind + "' models");
        } else {
            throw std::runtime_error("unsupported model kind '" + kind + "' in " +
                                     o.model.string());
        }
    }

    write_score_file(data.ids, scores, o.out);
    summarize_scores(scores);
}

// ---------------------------------------------------------------------------
// fit-detector / score-detector

struct FitDetectorOpts {
    std::string au_name;
    std::string eu_name;
    fs::path id_au, id_eu, ood_au, ood_eu;
    fs::path out;
    std::string combiner = "logistic";
    double w1 = 0.5, w2 = 0.5;
    double delta_a = std::numeric_limits<double>::quiet_NaN();
    double delta_e = std::numeric_limits<double>::quiet_NaN();
    double quantile_a = 0.95, quantile_e = 0.95;
    int iterations = 2000;
    double lr = 0.1;
    double l2 = 1e-4;
};

void run_fit_detector(const FitDetectorOpts& o) {
    print_config("fit-detector", {{"au-name", o.au_name},
                                  {"eu-name", o.eu_name},
                                  {"id-au", o.id_au.string()},
                                  {"id-eu", o.id_eu.string()},
                                  {"ood-au", o.ood_au.string()},
                                  {"ood-eu", o.ood_eu.string()},
                                  {"out", o.out.string()},
                                  {"combiner", o.combiner},
                                  {"w1", fmt_num(o.w1)},
                                  {"w2", fmt_num(o.w2)},
                                  {"delta-a", fmt_num(o.delta_a)},
                                  {"delta-e", fmt_num(o.delta_e)},
                                  {"quantile-a", fmt_num(o.quantile_a)},
                                  {"quantile-e", fmt_num(o.quantile_e)},
                                  {"iterations", std::to_string(o.iterations)},
                                  {"lr", fmt_num(o.lr)},
                                  {"l2", fmt_num(o.l2)}});

    const auto id_au = read_aligned_scores(o.id_au, {}, "--id-au");
    const auto id_eu = read_aligned_scores(o.id_eu, ids_of(id_au), "--id-eu");
    const auto ood_au = read_aligned_scores(o.ood_au, {}, "--ood-au");
    const auto ood_eu = read_aligned_scores(o.ood_eu, ids_of(ood_au), "--ood-eu");

    ood::DetectorFitOptions options;
    options.combiner = o.combiner == "max"      ? ood::CombinerKind::MaxRule
                       : o.combiner == "linear" ? ood::CombinerKind::Linear
                                                : ood::CombinerKind::Logistic;
    options.w1 = o.w1;
    options.w2 = o.w2;
    options.delta_a = o.delta_a;
    options.delta_e = o.delta_e;
    options.quantile_a = o.quantile_a;
    options.quantile_e = o.quantile_e;
    options.logistic.iterations = o.iterations;
    options.logistic.learning_rate = o.lr;
    options.logistic.l2_penalty = o.l2;

    const ood::DetectorComposition detector =
        ood::fit_detector(o.au_name, o.eu_name, score_columns({id_au, id_eu}),
                          score_columns({ood_au, ood_eu}), options);
    ood::write_model(ood::detector_to_json(detector), o.out);

    std::cout << "fitted " << o.combiner << " composition of " << o.au_name << " + " << o.eu_name;
    if (detector.combiner == ood::CombinerKind::MaxRule)
        std::cout << "  (delta_a " << fmt_num(detector.delta_a) << ", delta_e "
                  << fmt_num(detector.delta_e) << ")";
    else if (detector.combiner == ood::CombinerKind::Linear)
        std::cout << "  (w1 " << fmt_num(detector.w1) << ", w2 " << fmt_num(detector.w2) << ")";
    else
        std::cout << "  (beta " << fmt_num(detector.logistic.beta[0]) << ", "
                  << fmt_num(detector.logistic.beta[1]) << ", intercept "
                  << fmt_num(detector.logistic.beta0) << ")";
    std::cout << "\nmodel written to " << o.out.string() << "\n";
}

struct ScoreDetectorOpts {
    fs::path detector;
    fs::path au, eu;
    fs::path out;
};

void run_score_detector(const ScoreDetectorOpts& o) {
    print_config("score-detector", {{"detector", o.detector.string()},
                                    {"au", o.au.string()},
                                    {"eu", o.eu.string()},
                                    {"out", o.out.string()}});
    const ood::DetectorComposition detector =
        ood::detector_from_json(load_model_of_kind(o.detector, "detector", "--detector"));
    const auto au = read_aligned_scores(o.au, {}, "--au");
    const auto eu = read_aligned_scores(o.eu, ids_of(au), "--eu");
    ood::Vector scores(static_cast<Eigen::Index>(au.size()));
    for (std::size_t i = 0; i < au.size(); ++i)
        scores[static_cast<Eigen::Index>(i)] = ood::score_detector(detector, au[i].score, eu[i].score);
    write_score_file(ids_of(au), scores, o.out);
    summarize_scores(scores);
}

// ---------------------------------------------------------------------------
// fit-ensemble / score-ensemble

struct FitEnsembleOpts {
    std::vector<std::string> names;
    std::vector<fs::path> id_scores;
    std::vector<fs::path> ood_scores;
    fs::path out;
    int iterations = 2000;
    double lr = 0.1;
    double l2 = 1e-4;
};

std::string join(const std::vector<std::string>& parts) {
    std::string s;
    for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? "," : "") + parts[i];
    return s;
}

std::vector<std::string> path_strings(const std::vector<fs::path>& paths) {
    std::vector<std::string> s;
    s.reserve(paths.size());
    for (const auto& p : paths) s.push_back(p.string());
    return s;
}

// Reads one score CSV per channel and stacks them into an n x c matrix,
// checking that every channel describes the same rows in the same order.
ood::Matrix read_channel_matrix(const std::vector<fs::path>& paths, const std::string& role,
                                std::vector<std::string>* ids_out = nullptr) {
    std::vector<std::vector<ood::ScoreRow>> channels;
    std::vector<std::string> ids;
    for (const auto& path : paths) {
        channels.push_back(read_aligned_scores(path, ids, role));
        if (ids.empty()) ids = ids_of(channels.front());
    }
    if (ids_out) *ids_out = ids;
    return score_columns(channels);
}

void run_fit_ensemble(const FitEnsembleOpts& o) {
    print_config("fit-ensemble", {{"names", join(o.names)},
                                  {"id-scores", join(path_strings(o.id_scores))},
                                  {"ood-scores", join(path_strings(o.ood_scores))},
                                  {"out", o.out.string()},
                                  {"iterations", std::to_string(o.iterations)},
                                  {"lr", fmt_num(o.lr)},
                                  {"l2", fmt_num(o.l2)}});
    if (o.names.size() != o.id_scores.size() || o.names.size() != o.ood_scores.size())
        throw UsageError("--names, --id-scores, and --ood-scores must list the same number "
                         "of channels");

    ood::LogisticConfig cfg;
    cfg.iterations = o.iterations;
    cfg.learning_rate = o.lr;
    cfg.l2_penalty = o.l2;
    const ood::EnsembleModel model =
        ood::fit_ensemble(o.names, read_channel_matrix(o.id_scores, "--id-scores"),
                          read_channel_matrix(o.ood_scores, "--ood-scores"), cfg);
    ood::write_model(ood::ensemble_to_json(model), o.out);
    std::cout << "fitted ensemble over " << join(o.names) << ":";
    for (Eigen::Index c = 0; c < model.logistic.beta.size(); ++c)
        std::cout << " beta[" << o.names[static_cast<std::size_t>(c)]
                  << "] = " << fmt_num(model.logistic.beta[c]);
    std::cout << ", intercept " << fmt_num(model.logistic.beta0) << "\n"
              << "model written to " << o.out.string() << "\n";
}

struct ScoreEnsembleOpts {
    fs::path ensemble;
    std::vector<fs::path> scores;
    fs::path out;
};

void run_score_ensemble(const ScoreEnsembleOpts& o) {
    print_config("score-ensemble", {{"ensemble", o.ensemble.string()},
                                    {"scores", join(path_strings(o.scores))},
                                    {"out", o.out.string()}});
    const ood::EnsembleModel model =
        ood::ensemble_from_json(load_model_of_kind(o.ensemble, "ensemble", "--ensemble"));
    if (o.scores.size() != model.detector_names.size())
        throw std::runtime_error("ensemble expects " + std::to_string(model.detector_names.size()) +
                                 " channels (" + join(model.detector_names) + "), got " +
                                 std::to_string(o.scores.size()) + " score files");
    std::vector<std::string> ids;
    const ood::Matrix channels = read_channel_matrix(o.scores, "--scores", &ids);
    ood::Vector scores(channels.rows());
    for (Eigen::Index i = 0; i < channels.rows(); ++i)
        scores[i] = ood::score_ensemble(model, channels.row(i).transpose());
    write_score_file(ids, scores, o.out);
    summarize_scores(scores);
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
    fs::path id;
    fs::path ood;
    double tpr = 0.95;
    fs::path out;
};

void run_eval(const EvalOpts& o) {
    print_config("eval", {{"id", o.id.string()},
                          {"ood", o.ood.string()},
                          {"tpr", fmt_num(o.tpr)},
                          {"out", o.out.empty() ? "(none)" : o.out.string()}});
    const ood::Vector id_scores = ood::scores_as_vector(ood::read_scores(o.id));
    const ood::Vector ood_scores = ood::scores_as_vector(ood::read_scores(o.ood));
    const ood::MetricsReport report = ood::evaluate(id_scores, ood_scores, o.tpr);
    std::cout << ood::report_table(report);
    if (!o.out.empty()) {
        ood::write_report(report, o.out);
        std::cout << "report written to " << o.out.string() << "\n";
    }
}

// ---------------------------------------------------------------------------
// reproduce-toy

struct ReproduceOpts {
    fs::path out;
    int seeds = 1;
    std::uint64_t seed = 0;
    std::string proxy = "ood";
    ood::ToyPipelineConfig base;  // carries all the study defaults
};

void run_reproduce(const ReproduceOpts& o) {
    print_config("reproduce-toy",
                 {{"out", o.out.string()},
                  {"seeds", std::to_string(o.seeds)},
                  {"seed", std::to_string(o.seed)},
                  {"proxy", o.proxy},
                  {"tpr", fmt_num(o.base.tpr_target)},
                  {"n-train", std::to_string(o.base.n_train_per_class)},
                  {"n-val", std::to_string(o.base.n_val_per_class)},
                  {"n-test", std::to_string(o.base.n_test_per_class)},
                  {"n-ood-val", std::to_string(o.base.n_ood_val_per_cluster)},
                  {"n-ood-test", std::to_string(o.base.n_ood_test_per_cluster)},
                  {"noise", fmt_num(o.base.noise_sigma)},
                  {"epochs", std::to_string(o.base.train_cfg.epochs)},
                  {"batch", std::to_string(o.base.train_cfg.batch_size)},
                  {"lr", fmt_num(o.base.train_cfg.learning_rate)},
                  {"l2", fmt_num(o.base.train_cfg.l2_penalty)},
                  {"odin-eps", fmt_num(o.base.odin.epsilon)},
                  {"odin-temp", fmt_num(o.base.odin.temperature)},
                  {"k", std::to_string(o.base.k)},
                  {"retained-fraction", fmt_num(o.base.retained_fraction)},
                  {"fgsm-eps", fmt_num(o.base.fgsm_epsilon)}});

    std::vector<ood::ToyPipelineResult> results;
    for (int s = 0; s < o.seeds; ++s) {
        ood::ToyPipelineConfig cfg = o.base;
        cfg.seed = o.seed + static_cast<std::uint64_t>(s);
        const fs::path seed_dir = o.out / ("seed_" + std::to_string(cfg.seed));
        std::cout << "running seed " << cfg.seed << " -> " << seed_dir.string() << "\n";
        results.push_back(ood::run_toy_pipeline(cfg, seed_dir));
    }
    const auto proxy = o.proxy == "fgsm" ? ood::ProxyMode::Fgsm : ood::ProxyMode::RealOod;
    const std::string table = ood::toy_summary_table(results, proxy, o.base.tpr_target);
    const fs::path summary = o.out / "summary.txt";
    std::ofstream(summary, std::ios::binary | std::ios::trunc) << table;
    std::cout << "\n" << table << "summary written to " << summary.string() << "\n";
}

}  // namespace

// ---------------------------------------------------------------------------

int main(int argc, char** argv) try {
    CLI::App app{"uncertainty-based out-of-distribution detection toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "JSON config file of per-command sections, e.g. "
                   "{\"gen-toy\": {\"seed\": 7}}; command-line flags override it");
    app.config_formatter(std::make_shared<JsonConfig>());
    app.allow_config_extras(CLI::config_extras_mode::error);

    // gen-toy ---------------------------------------------------------------
    auto gt = std::make_shared<GenToyOpts>();
    {
        CLI::App* cmd = app.add_subcommand(
            "gen-toy", "generate the two-moons benchmark with three OOD clusters (A/B/C)");
        cmd->fallthrough();
        cmd->add_option("--out", gt->out, "output directory")->required();
        cmd->add_option("--seed", gt->seed, "master random seed (default 0)");
        cmd->add_option("--n-id", gt->n_id, "training points per class (default 500)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--n-val", gt->n_val, "validation points per class (default 250)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--n-test", gt->n_test, "test points per class (default 500)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--n-ood", gt->n_ood, "test points per OOD cluster (default 200)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--n-ood-val", gt->n_ood_val,
                        "validation points per OOD cluster (default 100)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--noise", gt->noise, "Gaussian noise level on the moons (default 0.1)")
            ->check(CLI::NonNegativeNumber);
        cmd->callback([gt] { run_gen_toy(*gt); });
    }

    // train -----------------------------------------------------------------
    auto tr = std::make_shared<TrainOpts>();
    {
        CLI::App* cmd = app.add_subcommand("train", "train the softmax classifier on labeled rows");
        cmd->fallthrough();
        cmd->add_option("--data", tr->data, "training CSV (raw inputs with labels)")->required();
        cmd->add_option("--out", tr->out, "output model JSON")->required();
        cmd->add_option("--arch", tr->arch, "layer sizes, e.g. 2,50,2,2 (default)");
        cmd->add_option("--epochs", tr->epochs, "training epochs (default 300)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--batch", tr->batch, "minibatch size (default 32)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--lr", tr->lr, "learning rate (default 0.05)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--l2", tr->l2, "L2 penalty (default 0)")->check(CLI::NonNegativeNumber);
        cmd->add_option("--seed", tr->seed, "seed for init and batch order (default 0)");
        cmd->callback([tr] { run_train(*tr); });
    }

    // extract ---------------------------------------------------------------
    auto ex = std::make_shared<ExtractOpts>();
    {
        CLI::App* cmd = app.add_subcommand(
            "extract", "run the classifier and write penultimate features + softmax columns");
        cmd->fallthrough();
        cmd->add_option("--model", ex->model, "mlp model JSON")->required();
        cmd->add_option("--data", ex->data, "input CSV (raw inputs)")->required();
        cmd->add_option("--out", ex->out, "output feature CSV")->required();
        cmd->callback([ex] { run_extract(*ex); });
    }

    // attack-fgsm -------------------------------------------------------------
    auto at = std::make_shared<AttackOpts>();
    {
        CLI::App* cmd = app.add_subcommand(
            "attack-fgsm", "perturb labeled inputs along the loss-gradient sign");
        cmd->fallthrough();
        cmd->add_option("--model", at->model, "mlp model JSON")->required();
        cmd->add_option("--data", at->data, "input CSV (raw labeled inputs)")->required();
        cmd->add_option("--out", at->out, "output CSV of perturbed inputs")->required();
        cmd->add_option("--epsilon", at->epsilon, "attack step size (default 0.2)")
            ->check(CLI::NonNegativeNumber);
        cmd->callback([at] { run_attack(*at); });
    }

    // fit ---------------------------------------------------------------------
    auto ft = std::make_shared<FitOpts>();
    {
        CLI::App* cmd =
            app.add_subcommand("fit", "fit an uncertainty indicator on a feature CSV");
        cmd->fallthrough();
        cmd->add_option("--kind", ft->kind, "indicator family")
            ->required()
            ->check(CLI::IsMember({"mahalanobis", "pca", "conformance", "knn-entropy"}));
        cmd->add_option("--data", ft->data, "fit data CSV (labeled feature rows)")->required();
        cmd->add_option("--out", ft->out, "output model JSON")->required();
        cmd->add_option("--covariance", ft->covariance, "mahalanobis covariance (default tied)")
            ->check(CLI::IsMember({"tied", "per-class"}));
        cmd->add_option("--retained-fraction", ft->retained_fraction,
                        "pca variance fraction retained per class (default 0.4)")
            ->check(CLI::Range(std::numeric_limits<double>::min(), 1.0));
        cmd->add_option("--k", ft->k, "neighborhood size (default 10)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--deviation", ft->deviation,
                        "conformance deviation: signed mean or mean absolute (default signed)")
            ->check(CLI::IsMember({"signed", "abs"}));
        cmd->add_flag("--renormalize", ft->renormalize,
                      "rescale softmax columns that do not sum to one (external ingestion)");
        CLI::Option* sel =
            cmd->add_flag("--select-k", ft->select_k,
                          "pick k from {10,20,30,40,50} by validation TNR (ties -> smaller k)");
        CLI::Option* idv = cmd->add_option("--id-val", ft->id_val, "in-distribution validation CSV");
        CLI::Option* odv = cmd->add_option("--ood-val", ft->ood_val, "OOD validation CSV");
        sel->needs(idv)->needs(odv);
        cmd->add_option("--tpr", ft->tpr, "TPR target for --select-k (default 0.95)")
            ->check(CLI::Range(std::numeric_limits<double>::min(), 1.0));
        cmd->callback([ft] { run_fit(*ft); });
    }

    // score ---------------------------------------------------------------------
    auto sc = std::make_shared<ScoreOpts>();
    {
        CLI::App* cmd = app.add_subcommand(
            "score", "score a CSV with a fitted model or with softmax-derived indicators");
        cmd->fallthrough();
        cmd->add_option("--model", sc->model,
                        "model JSON (omit to score stored softmax columns directly)");
        cmd->add_option("--data", sc->data, "input CSV")->required();
        cmd->add_option("--out", sc->out, "output score CSV")->required();
        cmd->add_option("--indicator", sc->indicator, "softmax indicator for mlp models")
            ->check(CLI::IsMember({"sbp", "entropy", "odin"}));
        cmd->add_option("--odin-eps", sc->odin_eps, "odin input perturbation (default 0.005)")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--odin-temp", sc->odin_temp, "odin temperature (default 10)")
            ->check(CLI::PositiveNumber);
        cmd->add_flag("--renormalize", sc->renormalize,
                      "rescale softmax columns that do not sum to one (external ingestion)");
        cmd->callback([sc] { run_score(*sc); });
    }

    // fit-detector ---------------------------------------------------------------
    auto fd = std::make_shared<FitDetectorOpts>();
    {
        CLI::App* cmd = app.add_subcommand(
            "fit-detector", "compose an aleatoric and an epistemic score channel into a detector");
        cmd->fallthrough();
        cmd->add_option("--au-name", fd->au_name, "name of the aleatoric channel")->required();
        cmd->add_option("--eu-name", fd->eu_name, "name of the epistemic channel")->required();
        cmd->add_option("--id-au", fd->id_au, "iD scores, aleatoric channel")->required();
        cmd->add_option("--id-eu", fd->id_eu, "iD scores, epistemic channel")->required();
        cmd->add_option("--ood-au", fd->ood_au, "proxy-OOD scores, aleatoric channel")->required();
        cmd->add_option("--ood-eu", fd->ood_eu, "proxy-OOD scores, epistemic channel")->required();
        cmd->add_option("--out", fd->out, "output model JSON")->required();
        cmd->add_option("--combiner", fd->combiner,
                        "max (dominating uncertainty), linear, or logistic (default)")
            ->check(CLI::IsMember({"max", "linear", "logistic"}));
        cmd->add_option("--w1", fd->w1, "linear weight, aleatoric (default 0.5)");
        cmd->add_option("--w2", fd->w2, "linear weight, epistemic (default 0.5)");
        cmd->add_option("--delta-a", fd->delta_a,
                        "max-rule aleatoric threshold (default: iD quantile)");
        cmd->add_option("--delta-e", fd->delta_e,
                        "max-rule epistemic threshold (default: iD quantile)");
        cmd->add_option("--quantile-a", fd->quantile_a,
                        "iD quantile for the auto aleatoric threshold (default 0.95)")
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--quantile-e", fd->quantile_e,
                        "iD quantile for the auto epistemic threshold (default 0.95)")
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--iterations", fd->iterations, "logistic iterations (default 2000)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--lr", fd->lr, "logistic learning rate (default 0.1)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--l2", fd->l2, "logistic L2 penalty (default 1e-4)")
            ->check(CLI::NonNegativeNumber);
        cmd->callback([fd] { run_fit_detector(*fd); });
    }

    // score-detector --------------------------------------------------------------
    auto sd = std::make_shared<ScoreDetectorOpts>();
    {
        CLI::App* cmd =
            app.add_subcommand("score-detector", "apply a fitted detector to two score channels");
        cmd->fallthrough();
        cmd->add_option("--detector", sd->detector, "detector model JSON")->required();
        cmd->add_option("--au", sd->au, "aleatoric channel score CSV")->required();
        cmd->add_option("--eu", sd->eu, "epistemic channel score CSV")->required();
        cmd->add_option("--out", sd->out, "output score CSV")->required();
        cmd->callback([sd] { run_score_detector(*sd); });
    }

    // fit-ensemble ---------------------------------------------------------------
    auto fe = std::make_shared<FitEnsembleOpts>();
    {
        CLI::App* cmd = app.add_subcommand(
            "fit-ensemble", "fit the logistic combination of detector score channels");
        cmd->fallthrough();
        cmd->add_option("--names", fe->names, "channel names, comma separated")
            ->required()
            ->delimiter(',');
        cmd->add_option("--id-scores", fe->id_scores, "iD score CSVs, one per channel")
            ->required()
            ->delimiter(',');
        cmd->add_option("--ood-scores", fe->ood_scores, "proxy-OOD score CSVs, one per channel")
            ->required()
            ->delimiter(',');
        cmd->add_option("--out", fe->out, "output model JSON")->required();
        cmd->add_option("--iterations", fe->iterations, "logistic iterations (default 2000)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--lr", fe->lr, "logistic learning rate (default 0.1)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--l2", fe->l2, "logistic L2 penalty (default 1e-4)")
            ->check(CLI::NonNegativeNumber);
        cmd->callback([fe] { run_fit_ensemble(*fe); });
    }

    // score-ensemble --------------------------------------------------------------
    auto se = std::make_shared<ScoreEnsembleOpts>();
    {
        CLI::App* cmd = app.add_subcommand(
            "score-ensemble", "apply a fitted ensemble to its detector score channels");
        cmd->fallthrough();
        cmd->add_option("--ensemble", se->ensemble, "ensemble model JSON")->required();
        cmd->add_option("--scores", se->scores, "score CSVs, one per channel, in model order")
            ->required()
            ->delimiter(',');
        cmd->add_option("--out", se->out, "output score CSV")->required();
        cmd->callback([se] { run_score_ensemble(*se); });
    }

    // eval ---------------------------------------------------------------------
    auto ev = std::make_shared<EvalOpts>();
    {
        CLI::App* cmd =
            app.add_subcommand("eval", "compute detection metrics from iD and OOD score files");
        cmd->fallthrough();
        cmd->add_option("--id", ev->id, "in-distribution score CSV")->required();
        cmd->add_option("--ood", ev->ood, "OOD score CSV")->required();
        cmd->add_option("--tpr", ev->tpr, "TPR target for the TNR metric (default 0.95)")
            ->check(CLI::Range(std::numeric_limits<double>::min(), 1.0));
        cmd->add_option("--out", ev->out, "optional output report JSON");
        cmd->callback([ev] { run_eval(*ev); });
    }

    // reproduce-toy ---------------------------------------------------------------
    auto rp = std::make_shared<ReproduceOpts>();
    {
        CLI::App* cmd = app.add_subcommand(
            "reproduce-toy", "run the packaged two-moons study end to end and print the table");
        cmd->fallthrough();
        cmd->add_option("--out", rp->out, "output directory (one subdirectory per seed)")
            ->required();
        cmd->add_option("--seeds", rp->seeds, "number of seeds; table shows mean+-std (default 1)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--seed", rp->seed, "first seed (default 0)");
        cmd->add_option("--proxy", rp->proxy,
                        "which ensemble column the table reports: fit on held-out OOD clusters "
                        "or on FGSM perturbations (default ood)")
            ->check(CLI::IsMember({"ood", "fgsm"}));
        cmd->add_option("--tpr", rp->base.tpr_target, "TPR target (default 0.95)")
            ->check(CLI::Range(std::numeric_limits<double>::min(), 1.0));
        cmd->add_option("--n-train", rp->base.n_train_per_class,
                        "training points per class (default 500)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--n-val", rp->base.n_val_per_class,
                        "validation points per class (default 250)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--n-test", rp->base.n_test_per_class,
                        "test points per class (default 500)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--n-ood-val", rp->base.n_ood_val_per_cluster,
                        "validation points per OOD cluster (default 100)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--n-ood-test", rp->base.n_ood_test_per_cluster,
                        "test points per OOD cluster (default 200)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--noise", rp->base.noise_sigma, "moon noise level (default 0.1)")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--epochs", rp->base.train_cfg.epochs, "training epochs (default 300)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--batch", rp->base.train_cfg.batch_size,
                        "minibatch size (default 16 for the study)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--lr", rp->base.train_cfg.learning_rate, "learning rate (default 0.05)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--l2", rp->base.train_cfg.l2_penalty, "L2 penalty (default 0)")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--odin-eps", rp->base.odin.epsilon,
                        "odin input perturbation (default 0.005)")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--odin-temp", rp->base.odin.temperature, "odin temperature (default 10)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--k", rp->base.k, "neighborhood size (default 10)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--retained-fraction", rp->base.retained_fraction,
                        "pca retained variance fraction (default 0.4)")
            ->check(CLI::Range(std::numeric_limits<double>::min(), 1.0));
        cmd->add_option("--fgsm-eps", rp->base.fgsm_epsilon, "FGSM proxy step (default 0.2)")
            ->check(CLI::NonNegativeNumber);
        cmd->callback([rp] { run_reproduce(*rp); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    return 0;
} catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
} catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
}

#include "etfrank/checkpoint.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "etfrank/error.hpp"

namespace etfrank {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "etfrank-checkpoint";
constexpr int kVersion = 1;

json matrix_to_json(const nn::Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

json vector_to_json(const nn::RowVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nn::Matrix matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
        throw ShapeError("checkpoint matrix size does not match its declared shape");
    }
    return Eigen::Map<const nn::Matrix>(data.data(), rows, cols);
}

nn::RowVector vector_from_json(const json& j) {
    const auto data = j.get<std::vector<double>>();
    return Eigen::Map<const nn::RowVector>(data.data(), static_cast<Eigen::Index>(data.size()));
}

json train_config_json(const nn::TrainConfig& c) {
    return json{{"maxiter", c.maxiter},
                {"miniter", c.miniter},
                {"batch_size", c.batch_size},
                {"save_interval", c.save_interval},
                {"learning_rate", c.adam.learning_rate},
                {"beta1", c.adam.beta1},
                {"beta2", c.adam.beta2},
                {"epsilon", c.adam.epsilon},
                {"bn_momentum", c.bn_momentum},
                {"selection_metric", std::string(nn::metric_name(c.selection_metric))}};
}

nn::TrainConfig train_config_from_json(const json& j) {
    nn::TrainConfig c;
    c.maxiter = j.at("maxiter").get<std::uint64_t>();
    c.miniter = j.at("miniter").get<std::uint64_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.save_interval = j.at("save_interval").get<std::uint64_t>();
    c.adam.learning_rate = j.at("learning_rate").get<double>();
    c.adam.beta1 = j.at("beta1").get<double>();
    c.adam.beta2 = j.at("beta2").get<double>();
    c.adam.epsilon = j.at("epsilon").get<double>();
    c.bn_momentum = j.at("bn_momentum").get<double>();
    c.selection_metric = nn::parse_metric(j.at("selection_metric").get<std::string>());
    return c;
}

}  // namespace

std::string train_config_hash(const nn::TrainConfig& cfg, std::uint64_t seed) {
    json j = train_config_json(cfg);
    j["seed"] = seed;
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void save_checkpoint(const std::string& path, const CheckpointFile& file) {
    const auto& p = file.checkpoint.params;
    json layers = json::array();
    for (std::size_t l = 0; l < nn::kNumDense; ++l) {
        json layer{{"weight", matrix_to_json(p.dense[l].weight)}, {"bias", vector_to_json(p.dense[l].bias)}};
        if (l < nn::kNumNorm) {
            const auto& n = p.norm[l];
            layer["batch_norm"] = {{"gamma", vector_to_json(n.gamma)},
                                   {"beta", vector_to_json(n.beta)},
                                   {"running_mean", vector_to_json(n.running_mean)},
                                   {"running_var", vector_to_json(n.running_var)}};
        }
        layers.push_back(std::move(layer));
    }
    json j{{"format", kFormat},
           {"version", kVersion},
           {"num_features", p.num_features},
           {"seed", p.seed},
           {"layer_widths", nn::kLayerWidths},
           {"iteration", file.checkpoint.iteration},
           {"selection_metric", std::string(nn::metric_name(file.train_config.selection_metric))},
           {"metric_value", file.checkpoint.metric_value},
           {"config_hash", file.config_hash},
           {"train_config", train_config_json(file.train_config)},
           {"feature_context",
            {{"eps_den", file.features.eps_den},
             {"clip_bound", file.features.clip_bound},
             {"max_imputed_frac", file.features.max_imputed_frac}}},
           {"layers", std::move(layers)}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint '" + path + "'");
    out << j.dump(1) << '\n';
}

CheckpointFile load_checkpoint(const std::string& path, std::optional<std::size_t> expected_features) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("checkpoint '" + path + "' is not valid JSON: " + e.what());
    }
    try {
        if (j.at("format") != kFormat || j.at("version") != kVersion) {
            throw DataError("'" + path + "' is not a version-1 etfrank checkpoint");
        }
        CheckpointFile f;
        auto& p = f.checkpoint.params;
        p.num_features = j.at("num_features").get<std::size_t>();
        if (expected_features && *expected_features != p.num_features) {
            throw ShapeError("checkpoint expects f = " + std::to_string(p.num_features) + " features, data has " +
                             std::to_string(*expected_features));
        }
        p.seed = j.at("seed").get<std::uint64_t>();
        const auto& layers = j.at("layers");
        if (layers.size() != nn::kNumDense) throw ShapeError("checkpoint must hold 5 dense layers");
        for (std::size_t l = 0; l < nn::kNumDense; ++l) {
            p.dense[l].weight = matrix_from_json(layers[l].at("weight"));
            p.dense[l].bias = vector_from_json(layers[l].at("bias"));
            if (l < nn::kNumNorm) {
                const auto& n = layers[l].at("batch_norm");
                p.norm[l] = {vector_from_json(n.at("gamma")), vector_from_json(n.at("beta")),
                             vector_from_json(n.at("running_mean")), vector_from_json(n.at("running_var"))};
            }
        }
        p.validate();
        f.checkpoint.iteration = j.at("iteration").get<std::uint64_t>();
        f.checkpoint.metric_value = j.at("metric_value").get<double>();
        f.train_config = train_config_from_json(j.at("train_config"));
        f.config_hash = j.at("config_hash").get<std::string>();
        const auto& fc = j.at("feature_context");
        f.features.eps_den = fc.at("eps_den").get<std::array<double, kNumFeatures>>();
        f.features.clip_bound = fc.at("clip_bound").get<double>();
        f.features.max_imputed_frac = fc.at("max_imputed_frac").get<double>();
        return f;
    } catch (const json::exception& e) {
        throw DataError("malformed checkpoint '" + path + "': " + e.what());
    }
}

}  // namespace etfrank

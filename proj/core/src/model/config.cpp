#include "spliceloc/model/config.hpp"

#include "json.hpp"
#include "spliceloc/error.hpp"

namespace spliceloc::model {

void ModelConfig::validate() const {
    auto bad = [](const std::string& m) { throw Error(Errc::shape_mismatch, m); };
    if (d_model <= 0 || n_heads <= 0 || n_layers < 0 || L <= 0) bad("model dimensions must be positive");
    if (d_model % n_heads != 0) bad("n_heads must divide d_model");
    if (cnn1.fc + cnn2.fc + n_scalars != d_model) bad("cnn1.fc + cnn2.fc + n_scalars must equal d_model");
    for (const auto* c : {&cnn1, &cnn2}) {
        if (c->rows <= 0 || c->cols <= 0 || c->fc <= 0) bad("CNN input grid and FC width must be positive");
        for (int ch : c->channels)
            if (ch <= 0) bad("CNN channel counts must be positive");
    }
    if (mlp_hidden <= 0 || ffn_hidden <= 0) bad("hidden widths must be positive");
    if (dropout < 0.0 || dropout >= 1.0) bad("dropout must lie in [0, 1)");
}

namespace {

nlohmann::json cnn_json(const CnnConfig& c) {
    return {{"rows", c.rows}, {"cols", c.cols}, {"channels", c.channels}, {"fc", c.fc}};
}

CnnConfig cnn_from(const nlohmann::json& j) {
    return {j.at("rows").get<int>(), j.at("cols").get<int>(), j.at("channels").get<std::array<int, 3>>(),
            j.at("fc").get<int>()};
}

}  // namespace

std::string ModelConfig::to_json() const {
    nlohmann::json j = {{"d_model", d_model},       {"n_layers", n_layers},   {"n_heads", n_heads},
                        {"L", L},                   {"mlp_hidden", mlp_hidden}, {"ffn_hidden", ffn_hidden},
                        {"dropout", dropout},       {"ln_eps", ln_eps},       {"cnn1", cnn_json(cnn1)},
                        {"cnn2", cnn_json(cnn2)},   {"n_scalars", n_scalars}};
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        ModelConfig c;
        c.d_model = j.at("d_model");
        c.n_layers = j.at("n_layers");
        c.n_heads = j.at("n_heads");
        c.L = j.at("L");
        c.mlp_hidden = j.at("mlp_hidden");
        c.ffn_hidden = j.at("ffn_hidden");
        c.dropout = j.at("dropout");
        c.ln_eps = j.at("ln_eps");
        c.cnn1 = cnn_from(j.at("cnn1"));
        c.cnn2 = cnn_from(j.at("cnn2"));
        c.n_scalars = j.at("n_scalars");
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::format_error, std::string("model config: ") + e.what());
    }
}

ModelConfig ModelConfig::full() { return ModelConfig{}; }

ModelConfig ModelConfig::oracle_reduced() {
    ModelConfig c;
    c.d_model = 12;
    c.n_layers = 2;
    c.n_heads = 3;
    c.L = 4;
    c.mlp_hidden = 8;
    c.ffn_hidden = 16;
    c.cnn1 = {5, 3, {2, 3, 2}, 5};
    c.cnn2 = {3, 4, {2, 2, 3}, 4};
    c.n_scalars = 3;
    return c;
}

ModelConfig ModelConfig::reduced() {
    ModelConfig c;
    c.d_model = 60;
    c.n_layers = 2;
    c.n_heads = 5;
    c.mlp_hidden = 64;
    c.ffn_hidden = 120;
    c.cnn1.channels = {8, 16, 16};
    c.cnn1.fc = 30;
    c.cnn2.channels = {4, 8, 8};
    c.cnn2.fc = 12;
    return c;
}

}  // namespace spliceloc::model

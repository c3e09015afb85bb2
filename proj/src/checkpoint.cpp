#include "sbnet/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "sbnet/error.hpp"

namespace sbnet {

using nlohmann::json;

namespace {

constexpr int kCheckpointVersion = 1;

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols)
        throw DataError("checkpoint: matrix payload size mismatch");
    return m;
}

json single_to_json(const SingleBranchParams& p) {
    return json{{"d_in", p.d_in},
                {"h", p.h},
                {"d", p.d},
                {"w1", matrix_to_json(p.w1)},
                {"b1", p.b1},
                {"w2", matrix_to_json(p.w2)},
                {"b2", p.b2},
                {"bn_gamma", p.bn_gamma},
                {"bn_beta", p.bn_beta},
                {"bn_running_mean", p.bn_running_mean},
                {"bn_running_var", p.bn_running_var},
                {"bn_momentum", p.bn_momentum},
                {"bn_eps", p.bn_eps}};
}

SingleBranchParams single_from_json(const json& j) {
    SingleBranchParams p;
    p.d_in = j.at("d_in").get<std::size_t>();
    p.h = j.at("h").get<std::size_t>();
    p.d = j.at("d").get<std::size_t>();
    p.w1 = matrix_from_json(j.at("w1"));
    p.b1 = j.at("b1").get<std::vector<double>>();
    p.w2 = matrix_from_json(j.at("w2"));
    p.b2 = j.at("b2").get<std::vector<double>>();
    p.bn_gamma = j.at("bn_gamma").get<std::vector<double>>();
    p.bn_beta = j.at("bn_beta").get<std::vector<double>>();
    p.bn_running_mean = j.at("bn_running_mean").get<std::vector<double>>();
    p.bn_running_var = j.at("bn_running_var").get<std::vector<double>>();
    p.bn_momentum = j.at("bn_momentum").get<double>();
    p.bn_eps = j.at("bn_eps").get<double>();
    return p;
}

json branch_to_json(const BranchParams& b) {
    return json{{"w1", matrix_to_json(b.w1)},
                {"b1", b.b1},
                {"w2", matrix_to_json(b.w2)},
                {"b2", b.b2}};
}

BranchParams branch_from_json(const json& j) {
    BranchParams b;
    b.w1 = matrix_from_json(j.at("w1"));
    b.b1 = j.at("b1").get<std::vector<double>>();
    b.w2 = matrix_from_json(j.at("w2"));
    b.b2 = j.at("b2").get<std::vector<double>>();
    return b;
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainedModel& model) {
    json j;
    j["version"] = kCheckpointVersion;
    j["variant"] = variant_name(model.variant);
    j["d_in"] = model.d_in;
    j["hidden"] = model.hidden;
    j["embed_dim"] = model.embed_dim;
    j["seed"] = model.seed;
    j["loss"] = loss_kind_name(model.loss_kind);
    if (model.variant == Variant::Single) {
        j["single"] = single_to_json(model.single);
    } else {
        j["two"] = json{{"d_in", model.two.d_in},
                        {"h", model.two.h},
                        {"d", model.two.d},
                        {"face", branch_to_json(model.two.face)},
                        {"voice", branch_to_json(model.two.voice)},
                        {"fusion_w", matrix_to_json(model.two.fusion_w)},
                        {"fusion_b", model.two.fusion_b}};
    }
    j["head"] = json{{"w", matrix_to_json(model.head.w)}, {"b", model.head.b}};
    j["centers"] = matrix_to_json(model.centers.c);
    j["split"] = json{{"train", model.split.train},
                      {"validation", model.split.validation},
                      {"test", model.split.test}};
    j["epoch_mean_loss"] = model.epoch_mean_loss;

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << j.dump(2) << "\n";
}

TrainedModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw DataError("checkpoint parse error: " + std::string(e.what()));
    }
    if (j.at("version").get<int>() != kCheckpointVersion)
        throw DataError("unsupported checkpoint version");

    TrainedModel model;
    model.variant = parse_variant(j.at("variant").get<std::string>());
    model.d_in = j.at("d_in").get<std::size_t>();
    model.hidden = j.at("hidden").get<std::size_t>();
    model.embed_dim = j.at("embed_dim").get<std::size_t>();
    model.seed = j.at("seed").get<std::uint64_t>();
    model.loss_kind = parse_loss_kind(j.at("loss").get<std::string>());
    if (model.variant == Variant::Single) {
        model.single = single_from_json(j.at("single"));
    } else {
        const json& t = j.at("two");
        model.two.d_in = t.at("d_in").get<std::size_t>();
        model.two.h = t.at("h").get<std::size_t>();
        model.two.d = t.at("d").get<std::size_t>();
        model.two.face = branch_from_json(t.at("face"));
        model.two.voice = branch_from_json(t.at("voice"));
        model.two.fusion_w = matrix_from_json(t.at("fusion_w"));
        model.two.fusion_b = t.at("fusion_b").get<std::vector<double>>();
    }
    model.head.w = matrix_from_json(j.at("head").at("w"));
    model.head.b = j.at("head").at("b").get<std::vector<double>>();
    model.centers.c = matrix_from_json(j.at("centers"));
    model.split.train = j.at("split").at("train").get<std::vector<std::string>>();
    model.split.validation =
        j.at("split").at("validation").get<std::vector<std::string>>();
    model.split.test = j.at("split").at("test").get<std::vector<std::string>>();
    model.epoch_mean_loss = j.at("epoch_mean_loss").get<std::vector<double>>();
    return model;
}

}  // namespace sbnet

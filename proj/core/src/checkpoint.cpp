#include "htgn/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace htgn {

namespace {
constexpr const char* kFormat = "htgn-params";
constexpr int kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const NamedTensors& params) {
    nlohmann::json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    nlohmann::json p = nlohmann::json::object();
    for (const auto& [name, t] : params) {
        nlohmann::json entry;
        entry["shape"] = {t.rows(), t.cols()};
        std::vector<double> data;
        data.reserve(static_cast<std::size_t>(t.rows() * t.cols()));
        for (Eigen::Index r = 0; r < t.rows(); ++r)
            for (Eigen::Index c = 0; c < t.cols(); ++c) data.push_back(t.value()(r, c));
        entry["data"] = std::move(data);
        p[name] = std::move(entry);
    }
    j["params"] = std::move(p);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump() << "\n";
}

void load_checkpoint(const std::string& path, NamedTensors& params) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("format", "") != kFormat)
        throw std::runtime_error("not a parameter checkpoint: " + path);
    if (j.value("version", -1) != kVersion)
        throw std::runtime_error("unsupported checkpoint version in " + path);
    const auto& p = j.at("params");
    for (auto& [name, t] : params) {
        if (!p.contains(name))
            throw std::runtime_error("checkpoint missing parameter '" + name + "'");
        const auto& entry = p.at(name);
        auto rows = entry.at("shape").at(0).get<Eigen::Index>();
        auto cols = entry.at("shape").at(1).get<Eigen::Index>();
        if (rows != t.rows() || cols != t.cols())
            throw std::runtime_error("checkpoint shape mismatch for '" + name + "': file (" +
                                     std::to_string(rows) + "x" + std::to_string(cols) +
                                     "), model (" + std::to_string(t.rows()) + "x" +
                                     std::to_string(t.cols()) + ")");
        const auto& data = entry.at("data");
        if (static_cast<Eigen::Index>(data.size()) != rows * cols)
            throw std::runtime_error("checkpoint data length mismatch for '" + name + "'");
        Eigen::MatrixXd v(rows, cols);
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) v(r, c) = data[k++].get<double>();
        t.set_value(v);
    }
}

}  // namespace htgn

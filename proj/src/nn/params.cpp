#include "stb/nn/params.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace stb::nn {

Param& ParamStore::create(const std::string& name, int rows, int cols, double init_std) {
    auto it = params_.find(name);
    if (it != params_.end()) {
        if (it->second.value.rows() != rows || it->second.value.cols() != cols)
            throw std::invalid_argument("param shape mismatch: " + name);
        return it->second;
    }
    Param p;
    p.name = name;
    p.value.resize(rows, cols);
    std::normal_distribution<double> dist(0.0, init_std);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) p.value(i, j) = dist(rng_);
    p.grad = Mat::Zero(rows, cols);
    return params_.emplace(name, std::move(p)).first->second;
}

Param& ParamStore::create_zero(const std::string& name, int rows, int cols) {
    auto it = params_.find(name);
    if (it != params_.end()) return it->second;
    Param p;
    p.name = name;
    p.value = Mat::Zero(rows, cols);
    p.grad = Mat::Zero(rows, cols);
    return params_.emplace(name, std::move(p)).first->second;
}

Param& ParamStore::create_const(const std::string& name, int rows, int cols, double v) {
    auto it = params_.find(name);
    if (it != params_.end()) return it->second;
    Param p;
    p.name = name;
    p.value = Mat::Constant(rows, cols, v);
    p.grad = Mat::Zero(rows, cols);
    return params_.emplace(name, std::move(p)).first->second;
}

Param& ParamStore::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("no such param: " + name);
    return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("no such param: " + name);
    return it->second;
}

void ParamStore::zero_grads() {
    for (auto& [k, p] : params_) p.grad.setZero();
}

void ParamStore::sgd_step(double lr) {
    for (auto& [k, p] : params_) p.value -= lr * p.grad;
}

double ParamStore::grad_norm(const std::string& prefix) const {
    double m = 0.0;
    for (const auto& [k, p] : params_) {
        if (k.rfind(prefix, 0) != 0) continue;
        m = std::max(m, p.grad.cwiseAbs().maxCoeff());
    }
    return m;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [k, p] : params_) out.push_back(k);
    return out;
}

void ParamStore::save(const std::string& bin_path, const std::string& manifest_path) const {
    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write " + bin_path);
    nlohmann::json manifest = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& [k, p] : params_) {
        manifest.push_back({{"name", k},
                            {"rows", p.value.rows()},
                            {"cols", p.value.cols()},
                            {"offset", offset}});
        // row-major on disk
        for (int i = 0; i < p.value.rows(); ++i)
            for (int j = 0; j < p.value.cols(); ++j) {
                double v = p.value(i, j);
                bin.write(reinterpret_cast<const char*>(&v), sizeof(double));
            }
        offset += static_cast<std::size_t>(p.value.size());
    }
    std::ofstream mf(manifest_path);
    if (!mf) throw std::runtime_error("cannot write " + manifest_path);
    mf << manifest.dump(2) << "\n";
}

void ParamStore::load(const std::string& bin_path, const std::string& manifest_path) {
    std::ifstream mf(manifest_path);
    if (!mf) throw std::runtime_error("cannot read " + manifest_path);
    nlohmann::json manifest = nlohmann::json::parse(mf);
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw std::runtime_error("cannot read " + bin_path);
    for (const auto& entry : manifest) {
        std::string name = entry.at("name");
        int rows = entry.at("rows");
        int cols = entry.at("cols");
        Param p;
        p.name = name;
        p.value.resize(rows, cols);
        bin.seekg(static_cast<std::streamoff>(entry.at("offset").get<std::size_t>() * sizeof(double)));
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) {
                double v;
                bin.read(reinterpret_cast<char*>(&v), sizeof(double));
                p.value(i, j) = v;
            }
        if (!bin) throw std::runtime_error("truncated checkpoint: " + bin_path);
        p.grad = Mat::Zero(rows, cols);
        params_[name] = std::move(p);
    }
}

}  // namespace stb::nn

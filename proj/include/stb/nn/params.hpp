#pragma once

#include <Eigen/Core>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace stb::nn {

using Mat = Eigen::MatrixXd;

/// One named learnable tensor with its gradient accumulator.
struct Param {
    std::string name;
    Mat value;
    Mat grad;
};

/// Name-ordered collection of parameters. Iteration order is the map order,
/// which fixes the checkpoint layout and makes SGD sweeps deterministic.
class ParamStore {
public:
    // Creates the parameter if missing (gaussian init, std `init_std`),
    // otherwise returns the existing one. Shapes must match on reuse.
    Param& create(const std::string& name, int rows, int cols, double init_std = 0.02);

    // Creates with all-zero init.
    Param& create_zero(const std::string& name, int rows, int cols);

    // Creates filled with a constant (layer-norm gains etc.).
    Param& create_const(const std::string& name, int rows, int cols, double v);

    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;
    bool has(const std::string& name) const { return params_.count(name) > 0; }

    void zero_grads();
    void sgd_step(double lr);

    // Max |grad| over a name prefix ("" = all). Used by loss reports.
    double grad_norm(const std::string& prefix = "") const;

    std::size_t size() const { return params_.size(); }
    std::vector<std::string> names() const;

    // Flat binary archive + JSON manifest (name, shape, offset in doubles).
    void save(const std::string& bin_path, const std::string& manifest_path) const;
    void load(const std::string& bin_path, const std::string& manifest_path);

    void set_seed(std::uint64_t seed) { rng_.seed(seed); }

    template <typename F>
    void for_each(F&& f) {
        for (auto& [k, p] : params_) f(p);
    }

private:
    std::map<std::string, Param> params_;
    std::mt19937_64 rng_{0x5eedULL};
};

}  // namespace stb::nn

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "farel/core/error.hpp"
#include "farel/core/log.hpp"

namespace farel::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint32_t { identity = 0, relu = 1, sigmoid = 2 };

inline const char* activation_name(Activation a) {
    switch (a) {
    case Activation::relu:
        return "relu";
    case Activation::sigmoid:
        return "sigmoid";
    default:
        return "identity";
    }
}

struct DenseLayer {
    Matrix weight; // out x in
    Vector bias;   // out
    Activation activation = Activation::identity;

    std::size_t inputs() const noexcept { return static_cast<std::size_t>(weight.cols()); }
    std::size_t outputs() const noexcept { return static_cast<std::size_t>(weight.rows()); }
};

/// Gradients with the same shapes as the network parameters.
struct Gradients {
    std::vector<Matrix> weight;
    std::vector<Vector> bias;

    bool finite() const {
        for (const auto& w : weight) {
            if (!w.allFinite()) {
                return false;
            }
        }
        for (const auto& b : bias) {
            if (!b.allFinite()) {
                return false;
            }
        }
        return true;
    }
    void scale(double f) {
        for (auto& w : weight) {
            w *= f;
        }
        for (auto& b : bias) {
            b *= f;
        }
    }
};

/// Layer inputs and outputs of one forward pass; samples are columns.
struct ForwardCache {
    std::vector<Matrix> inputs;
    std::vector<Matrix> outputs;
};

inline void activate(Matrix& z, Activation a) {
    switch (a) {
    case Activation::relu:
        z = z.cwiseMax(0.0);
        break;
    case Activation::sigmoid:
        z = (1.0 + (-z.array()).exp()).inverse().matrix();
        break;
    case Activation::identity:
        break;
    }
}

/// Derivative of the activation expressed through its output y.
inline Matrix activation_grad(const Matrix& y, const Matrix& dy, Activation a) {
    switch (a) {
    case Activation::relu:
        return (y.array() > 0.0).select(dy, 0.0);
    case Activation::sigmoid:
        return (dy.array() * y.array() * (1.0 - y.array())).matrix();
    case Activation::identity:
        break;
    }
    return dy;
}

class DenseNet {
public:
    DenseNet() = default;

    /// Layers of the given widths (widths.size() - 1 layers) with uniform Xavier initialization.
    template <class Rng>
    DenseNet(const std::vector<std::size_t>& widths, const std::vector<Activation>& activations, Rng& rng) {
        require(widths.size() >= 2, "a network needs at least one layer");
        require(activations.size() + 1 == widths.size(), "one activation per layer");
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            require(widths[l] > 0 && widths[l + 1] > 0, "layer widths must be positive");
            const auto in = static_cast<Eigen::Index>(widths[l]);
            const auto out = static_cast<Eigen::Index>(widths[l + 1]);
            const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
            std::uniform_real_distribution<double> u(-bound, bound);
            DenseLayer layer;
            layer.weight.resize(out, in);
            for (Eigen::Index r = 0; r < out; ++r) {
                for (Eigen::Index c = 0; c < in; ++c) {
                    layer.weight(r, c) = u(rng);
                }
            }
            layer.bias = Vector::Zero(out);
            layer.activation = activations[l];
            layers_.push_back(std::move(layer));
        }
    }

    explicit DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { check_shapes(); }

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }
    std::size_t input_size() const noexcept { return layers_.empty() ? 0 : layers_.front().inputs(); }
    std::size_t output_size() const noexcept { return layers_.empty() ? 0 : layers_.back().outputs(); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) {
            n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
        }
        return n;
    }

    Matrix forward(const Matrix& x) const {
        require(static_cast<std::size_t>(x.rows()) == input_size(), "network input has the wrong width");
        Matrix h = x;
        for (const auto& l : layers_) {
            Matrix z = (l.weight * h).colwise() + l.bias;
            activate(z, l.activation);
            h = std::move(z);
        }
        return h;
    }

    Matrix forward(const Matrix& x, ForwardCache& cache) const {
        require(static_cast<std::size_t>(x.rows()) == input_size(), "network input has the wrong width");
        cache.inputs.clear();
        cache.outputs.clear();
        Matrix h = x;
        for (const auto& l : layers_) {
            cache.inputs.push_back(h);
            Matrix z = (l.weight * h).colwise() + l.bias;
            activate(z, l.activation);
            cache.outputs.push_back(z);
            h = std::move(z);
        }
        return h;
    }

    /// Gradients of sum(dy .* output) w.r.t. every parameter; optionally also the input gradient.
    Gradients backward(const ForwardCache& cache, const Matrix& dy, Matrix* dx = nullptr) const {
        require(cache.outputs.size() == layers_.size(), "forward cache does not match the network");
        Gradients g;
        g.weight.resize(layers_.size());
        g.bias.resize(layers_.size());
        Matrix delta = dy;
        for (std::size_t i = layers_.size(); i-- > 0;) {
            const auto& l = layers_[i];
            const Matrix dz = activation_grad(cache.outputs[i], delta, l.activation);
            g.weight[i] = dz * cache.inputs[i].transpose();
            g.bias[i] = dz.rowwise().sum();
            if (i > 0 || dx != nullptr) {
                delta = l.weight.transpose() * dz;
            }
        }
        if (dx != nullptr) {
            *dx = std::move(delta);
        }
        return g;
    }

    Gradients zero_gradients() const {
        Gradients g;
        for (const auto& l : layers_) {
            g.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
            g.bias.push_back(Vector::Zero(l.bias.size()));
        }
        return g;
    }

    bool finite() const {
        for (const auto& l : layers_) {
            if (!l.weight.allFinite() || !l.bias.allFinite()) {
                return false;
            }
        }
        return true;
    }

    bool operator==(const DenseNet& o) const {
        if (layers_.size() != o.layers_.size()) {
            return false;
        }
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const auto& a = layers_[i];
            const auto& b = o.layers_[i];
            if (a.activation != b.activation || a.weight.rows() != b.weight.rows() ||
                a.weight.cols() != b.weight.cols() || a.weight != b.weight || a.bias != b.bias) {
                return false;
            }
        }
        return true;
    }

private:
    void check_shapes() const {
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            require(layers_[i].bias.size() == layers_[i].weight.rows(), "bias length must equal layer output width");
            if (i > 0) {
                require(layers_[i].weight.cols() == layers_[i - 1].weight.rows(), "adjacent layer shapes do not compose");
            }
        }
    }

    std::vector<DenseLayer> layers_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam() = default;
    Adam(const DenseNet& net, AdamConfig cfg = {}) : cfg_(cfg), m_(net.zero_gradients()), v_(net.zero_gradients()) {}

    const AdamConfig& config() const noexcept { return cfg_; }
    std::uint64_t steps() const noexcept { return t_; }

    /// Applies one update; a non-finite gradient aborts the step and returns false.
    bool step(DenseNet& net, const Gradients& g) {
        if (!g.finite()) {
            log::error("non-finite gradient; training step skipped");
            return false;
        }
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        auto& layers = net.layers();
        for (std::size_t i = 0; i < layers.size(); ++i) {
            update(layers[i].weight, g.weight[i], m_.weight[i], v_.weight[i], c1, c2);
            update(layers[i].bias, g.bias[i], m_.bias[i], v_.bias[i], c1, c2);
        }
        return true;
    }

private:
    template <class P, class G>
    void update(P& p, const G& g, G& m, G& v, double c1, double c2) const {
        m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
        v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
        p.array() -= cfg_.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.eps);
    }

    AdamConfig cfg_;
    Gradients m_;
    Gradients v_;
    std::uint64_t t_ = 0;
};

/// Plain gradient descent; returns false on a non-finite gradient.
inline bool sgd_step(DenseNet& net, const Gradients& g, double lr) {
    if (!g.finite()) {
        log::error("non-finite gradient; training step skipped");
        return false;
    }
    auto& layers = net.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].weight -= lr * g.weight[i];
        layers[i].bias -= lr * g.bias[i];
    }
    return true;
}

// Flat binary format:
//   8 bytes magic "FARELNN1"
//   u32 layer count
//   per layer: u32 inputs, u32 outputs, u32 activation
//   per layer: weights row-major (outputs x inputs) then bias, little-endian f64

static_assert(std::endian::native == std::endian::little, "network files are little-endian");

inline constexpr char net_magic[8] = {'F', 'A', 'R', 'E', 'L', 'N', 'N', '1'};

namespace detail {

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    require(static_cast<bool>(is), "truncated network file");
    return v;
}

} // namespace detail

inline void save(std::ostream& os, const DenseNet& net) {
    os.write(net_magic, sizeof net_magic);
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(net.layers().size()));
    for (const auto& l : net.layers()) {
        detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(l.inputs()));
        detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(l.outputs()));
        detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(l.activation));
    }
    for (const auto& l : net.layers()) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
                detail::put<double>(os, l.weight(r, c));
            }
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
            detail::put<double>(os, l.bias(r));
        }
    }
}

inline DenseNet load(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof magic);
    require(static_cast<bool>(is) && std::memcmp(magic, net_magic, sizeof magic) == 0, "not a farel network file");
    const auto n = detail::get<std::uint32_t>(is);
    std::vector<DenseLayer> layers(n);
    for (auto& l : layers) {
        const auto in = detail::get<std::uint32_t>(is);
        const auto out = detail::get<std::uint32_t>(is);
        const auto act = detail::get<std::uint32_t>(is);
        require(act <= 2, "unknown activation code in network file");
        l.weight.resize(out, in);
        l.bias.resize(out);
        l.activation = static_cast<Activation>(act);
    }
    for (auto& l : layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
                l.weight(r, c) = detail::get<double>(is);
            }
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
            l.bias(r) = detail::get<double>(is);
        }
    }
    return DenseNet(std::move(layers));
}

} // namespace farel::nn

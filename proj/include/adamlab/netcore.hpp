#pragma once

// Shallow network substrate: one hidden layer, linear output, full-batch MSE
// with hand-written backpropagation. Every routine is templated on an
// arithmetic policy (see precision.hpp) that rounds each intermediate result.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adamlab/errors.hpp"
#include "adamlab/precision.hpp"
#include "adamlab/rng.hpp"

namespace adamlab {

enum class Activation : std::uint8_t { tanh = 0, sigmoid = 1, relu = 2 };

inline std::string_view to_string(Activation act) {
    switch (act) {
        case Activation::tanh:
            return "tanh";
        case Activation::sigmoid:
            return "sigmoid";
        case Activation::relu:
            return "relu";
    }
    return "?";
}

inline Activation parse_activation(std::string_view text) {
    if (text == "tanh") return Activation::tanh;
    if (text == "sigmoid") return Activation::sigmoid;
    if (text == "relu") return Activation::relu;
    throw InvalidArgument("unknown activation '" + std::string(text) + "'");
}

struct NetworkShape {
    int input_dim = 1;
    int hidden_width = 1;
    int output_dim = 1;
    Activation activation = Activation::tanh;

    void validate() const {
        if (input_dim < 1 || hidden_width < 1 || output_dim < 1)
            throw InvalidArgument("network dimensions must be positive");
    }

    // Flat layout: [W1 (H x in, row-major) | b1 (H) | W2 (out x H, row-major) | b2 (out)]
    std::size_t w1_offset() const { return 0; }
    std::size_t b1_offset() const { return std::size_t(input_dim) * hidden_width; }
    std::size_t w2_offset() const { return b1_offset() + hidden_width; }
    std::size_t b2_offset() const { return w2_offset() + std::size_t(hidden_width) * output_dim; }
    std::size_t parameter_count() const { return b2_offset() + output_dim; }

    friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

using ParameterVector = std::vector<double>;

/// The four parameter blocks of a ParameterVector, each copied out.
struct LayerParams {
    std::vector<double> w1, b1, w2, b2;
    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

inline LayerParams unpack(std::span<const double> params, const NetworkShape& shape) {
    if (params.size() != shape.parameter_count())
        throw InvalidArgument("parameter vector length does not match shape");
    auto block = [&](std::size_t from, std::size_t to) {
        return std::vector<double>(params.begin() + from, params.begin() + to);
    };
    return {block(shape.w1_offset(), shape.b1_offset()), block(shape.b1_offset(), shape.w2_offset()),
            block(shape.w2_offset(), shape.b2_offset()), block(shape.b2_offset(), shape.parameter_count())};
}

inline ParameterVector pack(const LayerParams& layers, const NetworkShape& shape) {
    if (layers.w1.size() != shape.b1_offset() || layers.b1.size() != std::size_t(shape.hidden_width) ||
        layers.w2.size() != std::size_t(shape.hidden_width) * shape.output_dim ||
        layers.b2.size() != std::size_t(shape.output_dim))
        throw InvalidArgument("layer block sizes do not match shape");
    ParameterVector out;
    out.reserve(shape.parameter_count());
    for (const auto* block : {&layers.w1, &layers.b1, &layers.w2, &layers.b2})
        out.insert(out.end(), block->begin(), block->end());
    return out;
}

struct Dataset {
    std::vector<double> inputs;   // n_points x input_dim, row-major
    std::vector<double> targets;  // n_points x output_dim, row-major
    std::uint64_t dataset_index = 0;
    std::size_t n_points = 0;
    int input_dim = 1;
    int output_dim = 1;

    std::span<const double> input(std::size_t i) const {
        return std::span<const double>(inputs).subspan(i * input_dim, input_dim);
    }
    std::span<const double> target(std::size_t i) const {
        return std::span<const double>(targets).subspan(i * output_dim, output_dim);
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline constexpr int teacher_width = 4;
inline constexpr double teacher_weight_range = 2.0;
inline constexpr double default_noise_sigma = 0.01;

namespace detail {

template <class Arith>
inline double activate(double z, Activation act, const Arith& a) {
    switch (act) {
        case Activation::tanh:
            return a.q(std::tanh(z));
        case Activation::sigmoid:
            return a.q(1.0 / a.q(1.0 + a.q(std::exp(-z))));
        case Activation::relu:
            return z > 0.0 ? z : 0.0;
    }
    return z;
}

// Derivative from the pre-activation z and its activation value h.
template <class Arith>
inline double activate_slope(double z, double h, Activation act, const Arith& a) {
    switch (act) {
        case Activation::tanh:
            return a.q(1.0 - a.q(h * h));
        case Activation::sigmoid:
            return a.q(h * a.q(1.0 - h));
        case Activation::relu:
            return z > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

inline void check_dataset(const NetworkShape& shape, const Dataset& data) {
    if (data.n_points == 0) throw InvalidArgument("dataset is empty");
    if (data.input_dim != shape.input_dim || data.output_dim != shape.output_dim ||
        data.inputs.size() != data.n_points * shape.input_dim ||
        data.targets.size() != data.n_points * shape.output_dim)
        throw InvalidArgument("dataset dimensions do not match network shape");
}

}  // namespace detail

/// Forward pass for one input. `hidden` receives the pre-activations (first
/// H entries) followed by the activations (next H entries).
template <class Arith>
void forward_into(std::span<const double> params, const NetworkShape& shape, std::span<const double> x,
                  std::span<double> hidden, std::span<double> out, const Arith& a) {
    const int in = shape.input_dim;
    const int width = shape.hidden_width;
    const double* w1 = params.data() + shape.w1_offset();
    const double* b1 = params.data() + shape.b1_offset();
    const double* w2 = params.data() + shape.w2_offset();
    const double* b2 = params.data() + shape.b2_offset();
    for (int j = 0; j < width; ++j) {
        double acc = 0.0;
        for (int k = 0; k < in; ++k) acc = a.q(acc + a.q(w1[j * in + k] * x[k]));
        const double z = a.q(acc + b1[j]);
        hidden[j] = z;
        hidden[width + j] = detail::activate(z, shape.activation, a);
    }
    for (int o = 0; o < shape.output_dim; ++o) {
        double acc = 0.0;
        for (int j = 0; j < width; ++j) acc = a.q(acc + a.q(w2[o * width + j] * hidden[width + j]));
        out[o] = a.q(acc + b2[o]);
    }
}

/// Full-batch MSE loss and, when `gradient` is non-empty, its analytic
/// gradient. `scratch` is resized as needed and may be reused across calls.
template <class Arith>
double evaluate(std::span<const double> params, const NetworkShape& shape, const Dataset& data,
                std::span<double> gradient, std::vector<double>& scratch, const Arith& a) {
    const int width = shape.hidden_width;
    const int in = shape.input_dim;
    const int outs = shape.output_dim;
    scratch.resize(std::size_t(2 * width + 2 * outs + width));
    std::span<double> hidden(scratch.data(), 2 * width);
    std::span<double> y(scratch.data() + 2 * width, outs);
    std::span<double> dy(scratch.data() + 2 * width + outs, outs);
    double* dz = scratch.data() + 2 * width + 2 * outs;

    const bool with_grad = !gradient.empty();
    if (with_grad) std::fill(gradient.begin(), gradient.end(), 0.0);
    double* g_w1 = with_grad ? gradient.data() + shape.w1_offset() : nullptr;
    double* g_b1 = with_grad ? gradient.data() + shape.b1_offset() : nullptr;
    double* g_w2 = with_grad ? gradient.data() + shape.w2_offset() : nullptr;
    double* g_b2 = with_grad ? gradient.data() + shape.b2_offset() : nullptr;
    const double* w2 = params.data() + shape.w2_offset();

    const double count = static_cast<double>(data.n_points) * outs;
    const double scale = a.q(2.0 / count);
    double sum = 0.0;
    for (std::size_t i = 0; i < data.n_points; ++i) {
        const auto x = data.input(i);
        const auto t = data.target(i);
        forward_into(params, shape, x, hidden, y, a);
        for (int o = 0; o < outs; ++o) {
            const double e = a.q(y[o] - t[o]);
            sum = a.q(sum + a.q(e * e));
            dy[o] = a.q(scale * e);
        }
        if (!with_grad) continue;
        for (int o = 0; o < outs; ++o) {
            g_b2[o] = a.q(g_b2[o] + dy[o]);
            for (int j = 0; j < width; ++j)
                g_w2[o * width + j] = a.q(g_w2[o * width + j] + a.q(dy[o] * hidden[width + j]));
        }
        for (int j = 0; j < width; ++j) {
            double back = 0.0;
            for (int o = 0; o < outs; ++o) back = a.q(back + a.q(w2[o * width + j] * dy[o]));
            dz[j] = a.q(back * detail::activate_slope(hidden[j], hidden[width + j], shape.activation, a));
        }
        for (int j = 0; j < width; ++j) {
            g_b1[j] = a.q(g_b1[j] + dz[j]);
            for (int k = 0; k < in; ++k) g_w1[j * in + k] = a.q(g_w1[j * in + k] + a.q(dz[j] * x[k]));
        }
    }
    return a.q(sum / count);
}

// ---------------------------------------------------------------------------
// Mode-dispatching entry points

inline std::vector<double> forward(std::span<const double> params, const NetworkShape& shape,
                                   std::span<const double> x,
                                   const PrecisionMode& mode = PrecisionMode::native64()) {
    shape.validate();
    if (params.size() != shape.parameter_count())
        throw InvalidArgument("parameter vector length does not match shape");
    if (x.size() != std::size_t(shape.input_dim)) throw InvalidArgument("input dimension mismatch");
    std::vector<double> hidden(2 * std::size_t(shape.hidden_width));
    std::vector<double> out(shape.output_dim);
    with_arith(mode, [&](const auto& a) { forward_into(params, shape, x, hidden, out, a); });
    return out;
}

/// Mean squared error over points and output dimensions. A non-finite result
/// is returned as is; callers treat it as divergence.
inline double mse_loss(std::span<const double> params, const NetworkShape& shape, const Dataset& data,
                       const PrecisionMode& mode = PrecisionMode::native64()) {
    shape.validate();
    if (params.size() != shape.parameter_count())
        throw InvalidArgument("parameter vector length does not match shape");
    detail::check_dataset(shape, data);
    std::vector<double> scratch;
    return with_arith(mode, [&](const auto& a) { return evaluate(params, shape, data, {}, scratch, a); });
}

inline std::vector<double> grad(std::span<const double> params, const NetworkShape& shape, const Dataset& data,
                                const PrecisionMode& mode = PrecisionMode::native64()) {
    shape.validate();
    if (params.size() != shape.parameter_count())
        throw InvalidArgument("parameter vector length does not match shape");
    detail::check_dataset(shape, data);
    std::vector<double> gradient(shape.parameter_count());
    std::vector<double> scratch;
    with_arith(mode, [&](const auto& a) { evaluate(params, shape, data, gradient, scratch, a); });
    return gradient;
}

// ---------------------------------------------------------------------------
// Initialization and synthetic data

/// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases.
inline ParameterVector init_params(const NetworkShape& shape, std::uint64_t init_seed) {
    shape.validate();
    ParameterVector params(shape.parameter_count(), 0.0);
    CounterRng rng(init_seed, streams::init);
    const double r1 = 1.0 / std::sqrt(static_cast<double>(shape.input_dim));
    const double r2 = 1.0 / std::sqrt(static_cast<double>(shape.hidden_width));
    for (std::size_t i = shape.w1_offset(); i < shape.b1_offset(); ++i) params[i] = rng.uniform(-r1, r1);
    for (std::size_t i = shape.w2_offset(); i < shape.b2_offset(); ++i) params[i] = rng.uniform(-r2, r2);
    return params;
}

/// Shape of the width-4 teacher network behind a dataset.
inline NetworkShape teacher_shape(const NetworkShape& student) {
    return {student.input_dim, teacher_width, student.output_dim, student.activation};
}

/// Teacher parameters for dataset_index, all uniform in [-2, 2].
inline ParameterVector teacher_params(std::uint64_t dataset_index, const NetworkShape& student) {
    const NetworkShape shape = teacher_shape(student);
    CounterRng rng(dataset_index, streams::teacher);
    ParameterVector params(shape.parameter_count());
    for (double& p : params) p = rng.uniform(-teacher_weight_range, teacher_weight_range);
    return params;
}

/// Teacher regression data: n_points inputs evenly spaced on [-1, 1] (every
/// input coordinate of point i takes the i-th grid value), targets are the
/// teacher's output plus N(0, noise_sigma^2) noise. Bit-deterministic in its
/// arguments.
inline Dataset generate_dataset(std::uint64_t dataset_index, std::size_t n_points, const NetworkShape& shape,
                                double noise_sigma = default_noise_sigma) {
    shape.validate();
    if (n_points < 2) throw InvalidArgument("generate_dataset needs n_points >= 2");
    if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be non-negative");

    Dataset data;
    data.dataset_index = dataset_index;
    data.n_points = n_points;
    data.input_dim = shape.input_dim;
    data.output_dim = shape.output_dim;
    data.inputs.resize(n_points * shape.input_dim);
    data.targets.resize(n_points * shape.output_dim);

    const double last = static_cast<double>(n_points - 1);
    for (std::size_t i = 0; i < n_points; ++i) {
        // Symmetric form keeps both endpoints exact.
        const double x = (2.0 * static_cast<double>(i) - last) / last;
        for (int d = 0; d < shape.input_dim; ++d) data.inputs[i * shape.input_dim + d] = x;
    }

    const NetworkShape tshape = teacher_shape(shape);
    const ParameterVector teacher = teacher_params(dataset_index, shape);
    CounterRng noise(dataset_index, streams::noise);
    std::vector<double> hidden(2 * teacher_width);
    std::vector<double> y(shape.output_dim);
    for (std::size_t i = 0; i < n_points; ++i) {
        forward_into(teacher, tshape, data.input(i), hidden, y, Native64Arith{});
        for (int o = 0; o < shape.output_dim; ++o) {
            const double eps = noise.normal(0.0, 1.0);
            data.targets[i * shape.output_dim + o] = y[o] + noise_sigma * eps;
        }
    }
    return data;
}

/// Round every input and target into the arithmetic format of mode.
inline Dataset quantized(Dataset data, const PrecisionMode& mode) {
    for (double& v : data.inputs) v = quantize(v, mode);
    for (double& v : data.targets) v = quantize(v, mode);
    return data;
}

}  // namespace adamlab

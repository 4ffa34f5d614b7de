#include "lstmtrade/lstm.hpp"

#include <cmath>
#include <sstream>

namespace lstmtrade {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

constexpr const char* kCheckpointMagic = "lstmtrade-checkpoint";
constexpr int kCheckpointVersion = 1;

MatrixXd dropout_mask(Index rows, Index cols, double p, Rng& rng) {
    MatrixXd mask(rows, cols);
    const double keep_scale = 1.0 / (1.0 - p);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            mask(r, c) = uniform01(rng) < p ? 0.0 : keep_scale;
        }
    }
    return mask;
}

void fill_uniform(MatrixXd& m, Index col0, Index cols, double limit, Rng& rng) {
    for (Index c = col0; c < col0 + cols; ++c) {
        for (Index r = 0; r < m.rows(); ++r) {
            m(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
        }
    }
}

}  // namespace

void NetworkConfig::validate() const {
    if (num_layers < 1 || hidden_size < 1 || window < 1 || input_size < 1) {
        throw ConfigError("network sizes must be positive");
    }
    if (output_size != 1) {
        throw ConfigError("only scalar outputs are supported");
    }
    if (batch_size != 1) {
        throw ConfigError("only batch size 1 is supported");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw ConfigError("dropout must lie in [0, 1)");
    }
    if (iterations < 0) {
        throw ConfigError("iterations must be non-negative");
    }
    if (!(learning_rate > 0.0) || !(decay_rate > 0.0) || decay_steps < 1) {
        throw ConfigError("invalid learning-rate schedule");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_epsilon > 0.0)) {
        throw ConfigError("invalid ADAM constants");
    }
}

std::string NetworkConfig::architecture_key() const {
    return "L" + std::to_string(num_layers) + "-H" + std::to_string(hidden_size) + "-T" +
           std::to_string(window) + "-D" + format_double(dropout);
}

std::size_t NetworkConfig::parameter_count() const {
    std::size_t total = 0;
    std::size_t in = static_cast<std::size_t>(input_size);
    const auto h = static_cast<std::size_t>(hidden_size);
    for (int l = 0; l < num_layers; ++l) {
        total += 4 * h * (in + h + 1);
        in = h;
    }
    total += h * static_cast<std::size_t>(output_size);
    total += (per_position_bias ? static_cast<std::size_t>(batch_size * window) : 1u) *
             static_cast<std::size_t>(output_size);
    return total;
}

NetworkParams NetworkParams::zeros(const NetworkConfig& config) {
    config.validate();
    NetworkParams p;
    const Index h = config.hidden_size;
    Index in = config.input_size;
    for (int l = 0; l < config.num_layers; ++l) {
        LstmLayerParams layer;
        layer.w_x = MatrixXd::Zero(in, 4 * h);
        layer.w_h = MatrixXd::Zero(h, 4 * h);
        layer.bias = MatrixXd::Zero(1, 4 * h);
        p.layers.push_back(std::move(layer));
        in = h;
    }
    p.w_out = MatrixXd::Zero(h, config.output_size);
    p.b_out = MatrixXd::Zero(config.per_position_bias ? config.window * config.batch_size : 1,
                             config.output_size);
    return p;
}

void NetworkParams::for_each(const std::function<void(const std::string&, MatrixXd&)>& fn) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        fn(prefix + "w_x", layers[l].w_x);
        fn(prefix + "w_h", layers[l].w_h);
        fn(prefix + "bias", layers[l].bias);
    }
    fn("dense.w", w_out);
    fn("dense.b", b_out);
}

void NetworkParams::for_each(const std::function<void(const std::string&, const MatrixXd&)>& fn) const {
    const_cast<NetworkParams*>(this)->for_each(
        [&](const std::string& name, MatrixXd& m) { fn(name, m); });
}

std::size_t NetworkParams::size() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const MatrixXd& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
}

bool NetworkParams::all_finite() const {
    bool ok = true;
    for_each([&](const std::string&, const MatrixXd& m) { ok = ok && m.allFinite(); });
    return ok;
}

bool NetworkParams::same_shape(const NetworkParams& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& a = layers[l];
        const auto& b = other.layers[l];
        if (a.w_x.rows() != b.w_x.rows() || a.w_x.cols() != b.w_x.cols() || a.w_h.rows() != b.w_h.rows() ||
            a.w_h.cols() != b.w_h.cols() || a.bias.cols() != b.bias.cols()) {
            return false;
        }
    }
    return w_out.rows() == other.w_out.rows() && b_out.rows() == other.b_out.rows();
}

bool NetworkParams::operator==(const NetworkParams& other) const {
    if (!same_shape(other)) return false;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].w_x != other.layers[l].w_x || layers[l].w_h != other.layers[l].w_h ||
            layers[l].bias != other.layers[l].bias) {
            return false;
        }
    }
    return w_out == other.w_out && b_out == other.b_out;
}

NetworkParams init_glorot(const NetworkConfig& config, std::uint64_t seed) {
    NetworkParams p = NetworkParams::zeros(config);
    Rng rng(seed);
    const Index h = config.hidden_size;
    for (auto& layer : p.layers) {
        const Index in = layer.w_x.rows();
        const double lim_x = std::sqrt(6.0 / static_cast<double>(in + h));
        const double lim_h = std::sqrt(6.0 / static_cast<double>(h + h));
        for (int g = 0; g < 4; ++g) fill_uniform(layer.w_x, g * h, h, lim_x, rng);
        for (int g = 0; g < 4; ++g) fill_uniform(layer.w_h, g * h, h, lim_h, rng);
    }
    fill_uniform(p.w_out, 0, p.w_out.cols(),
                 std::sqrt(6.0 / static_cast<double>(h + config.output_size)), rng);
    return p;
}

ForwardResult forward(const NetworkParams& params, const MatrixXd& window, double dropout, Rng* rng) {
    if (params.layers.empty()) {
        throw ConfigError("network has no layers");
    }
    if (window.cols() != params.layers.front().w_x.rows()) {
        throw ConfigError("window has " + std::to_string(window.cols()) + " features, network expects " +
                          std::to_string(params.layers.front().w_x.rows()));
    }
    const Index steps = window.rows();
    if (params.b_out.rows() != 1 && params.b_out.rows() != steps) {
        throw ConfigError("window length " + std::to_string(steps) + " does not match dense bias of " +
                          std::to_string(params.b_out.rows()) + " positions");
    }
    const bool use_dropout = rng != nullptr && dropout > 0.0;

    ForwardResult out;
    out.layers.reserve(params.layers.size());
    const MatrixXd* layer_input = &window;
    for (const auto& layer : params.layers) {
        const Index h = layer.hidden();
        LayerCache cache;
        if (use_dropout) {
            cache.mask = dropout_mask(layer_input->rows(), layer_input->cols(), dropout, *rng);
            cache.input = layer_input->cwiseProduct(cache.mask);
        } else {
            cache.input = *layer_input;
        }
        MatrixXd z = cache.input * layer.w_x;
        z.rowwise() += layer.bias.row(0);
        cache.i.resize(steps, h);
        cache.o.resize(steps, h);
        cache.f.resize(steps, h);
        cache.g.resize(steps, h);
        cache.c.resize(steps, h);
        cache.tanh_c.resize(steps, h);
        cache.h.resize(steps, h);
        RowVectorXd h_prev = RowVectorXd::Zero(h);
        RowVectorXd c_prev = RowVectorXd::Zero(h);
        RowVectorXd zt(4 * h);
        for (Index t = 0; t < steps; ++t) {
            zt.noalias() = z.row(t);
            zt.noalias() += h_prev * layer.w_h;
            cache.i.row(t) = (1.0 + (-zt.segment(0, h).array()).exp()).inverse().matrix();
            cache.o.row(t) = (1.0 + (-zt.segment(h, h).array()).exp()).inverse().matrix();
            cache.f.row(t) = (1.0 + (-zt.segment(2 * h, h).array()).exp()).inverse().matrix();
            cache.g.row(t) = zt.segment(3 * h, h).array().tanh().matrix();
            cache.c.row(t) = cache.f.row(t).cwiseProduct(c_prev) + cache.i.row(t).cwiseProduct(cache.g.row(t));
            cache.tanh_c.row(t) = cache.c.row(t).array().tanh().matrix();
            cache.h.row(t) = cache.tanh_c.row(t).cwiseProduct(cache.o.row(t));
            h_prev = cache.h.row(t);
            c_prev = cache.c.row(t);
        }
        out.layers.push_back(std::move(cache));
        layer_input = &out.layers.back().h;
    }
    out.stacked_hidden = out.layers.back().h;
    out.outputs = out.stacked_hidden * params.w_out.col(0);
    if (params.b_out.rows() == 1) {
        out.outputs.array() += params.b_out(0, 0);
    } else {
        out.outputs += params.b_out.col(0);
    }
    if (!out.outputs.allFinite()) {
        throw NumericError("non-finite network output");
    }
    return out;
}

double mse_loss(const VectorXd& outputs, const VectorXd& targets) {
    if (outputs.size() != targets.size()) {
        throw ConfigError("loss: output/target length mismatch");
    }
    if (outputs.size() == 0) return 0.0;
    return (outputs - targets).squaredNorm() / static_cast<double>(outputs.size());
}

NetworkParams backward(const NetworkParams& params, const ForwardResult& cache, const VectorXd& targets,
                       double loss_scale) {
    const Index steps = cache.outputs.size();
    if (targets.size() != steps || cache.layers.size() != params.layers.size()) {
        throw ConfigError("backward: cache/target mismatch");
    }
    NetworkParams grad;
    grad.layers.resize(params.layers.size());

    const VectorXd d_out = (cache.outputs - targets) * (2.0 * loss_scale / static_cast<double>(steps));
    grad.w_out = cache.stacked_hidden.transpose() * d_out;
    if (params.b_out.rows() == 1) {
        grad.b_out = MatrixXd::Constant(1, 1, d_out.sum());
    } else {
        grad.b_out = d_out;
    }

    // Gradient with respect to the hidden outputs of the layer being processed.
    MatrixXd d_hidden = d_out * params.w_out.col(0).transpose();

    for (std::size_t li = params.layers.size(); li-- > 0;) {
        const auto& layer = params.layers[li];
        const auto& lc = cache.layers[li];
        const Index h = layer.hidden();
        MatrixXd dz(steps, 4 * h);
        RowVectorXd dh_next = RowVectorXd::Zero(h);
        RowVectorXd dc_next = RowVectorXd::Zero(h);
        for (Index t = steps; t-- > 0;) {
            const RowVectorXd dh = d_hidden.row(t) + dh_next;
            const auto tc = lc.tanh_c.row(t).array();
            const auto i = lc.i.row(t).array();
            const auto o = lc.o.row(t).array();
            const auto f = lc.f.row(t).array();
            const auto g = lc.g.row(t).array();
            const RowVectorXd dc = (dh.array() * o * (1.0 - tc * tc)).matrix() + dc_next;
            const RowVectorXd c_prev = t > 0 ? RowVectorXd(lc.c.row(t - 1)) : RowVectorXd::Zero(h);
            dz.block(t, 0, 1, h) = (dc.array() * g * i * (1.0 - i)).matrix();
            dz.block(t, h, 1, h) = (dh.array() * tc * o * (1.0 - o)).matrix();
            dz.block(t, 2 * h, 1, h) = (dc.array() * c_prev.array() * f * (1.0 - f)).matrix();
            dz.block(t, 3 * h, 1, h) = (dc.array() * i * (1.0 - g * g)).matrix();
            dc_next = (dc.array() * f).matrix();
            dh_next.noalias() = dz.row(t) * layer.w_h.transpose();
        }
        MatrixXd h_prev = MatrixXd::Zero(steps, h);
        if (steps > 1) h_prev.bottomRows(steps - 1) = lc.h.topRows(steps - 1);

        auto& g = grad.layers[li];
        g.w_x.noalias() = lc.input.transpose() * dz;
        g.w_h.noalias() = h_prev.transpose() * dz;
        g.bias = dz.colwise().sum();
        if (li > 0) {
            d_hidden.noalias() = dz * layer.w_x.transpose();
            if (lc.mask.size() > 0) d_hidden = d_hidden.cwiseProduct(lc.mask);
        }
    }
    return grad;
}

AdamOptions AdamOptions::from(const NetworkConfig& config) {
    AdamOptions o;
    o.learning_rate = config.learning_rate;
    o.decay_rate = config.decay_rate;
    o.decay_steps = config.decay_steps;
    o.beta1 = config.beta1;
    o.beta2 = config.beta2;
    o.epsilon = config.adam_epsilon;
    return o;
}

AdamState::AdamState(const NetworkParams& like, AdamOptions opts) : options(opts), m(like), v(like) {
    m.for_each([](const std::string&, MatrixXd& x) { x.setZero(); });
    v.for_each([](const std::string&, MatrixXd& x) { x.setZero(); });
}

double AdamState::learning_rate() const {
    return options.learning_rate *
           std::pow(options.decay_rate, static_cast<double>(step) / static_cast<double>(options.decay_steps));
}

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state) {
    if (!params.same_shape(grads) || !params.same_shape(state.m)) {
        throw ConfigError("adam: parameter/gradient shape mismatch");
    }
    const double lr = state.learning_rate();
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double b1 = state.options.beta1;
    const double b2 = state.options.beta2;
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    const double eps = state.options.epsilon;

    std::vector<const MatrixXd*> g;
    grads.for_each([&](const std::string&, const MatrixXd& x) { g.push_back(&x); });
    std::vector<MatrixXd*> m;
    state.m.for_each([&](const std::string&, MatrixXd& x) { m.push_back(&x); });
    std::vector<MatrixXd*> v;
    state.v.for_each([&](const std::string&, MatrixXd& x) { v.push_back(&x); });

    std::size_t k = 0;
    params.for_each([&](const std::string&, MatrixXd& p) {
        auto& mk = *m[k];
        auto& vk = *v[k];
        const auto& gk = *g[k];
        mk = b1 * mk + (1.0 - b1) * gk;
        vk = b2 * vk + (1.0 - b2) * gk.cwiseAbs2();
        p.array() -= lr * (mk.array() / c1) / ((vk.array() / c2).sqrt() + eps);
        ++k;
    });
}

TrainResult train_on_window(NetworkParams& params, const MatrixXd& window, const VectorXd& targets,
                            const NetworkConfig& config, std::uint64_t seed) {
    config.validate();
    if (window.rows() != targets.size()) {
        throw ConfigError("training window and targets differ in length");
    }
    TrainResult result;
    try {
        result.initial_loss = mse_loss(forward(params, window).outputs, targets);
    } catch (const NumericError&) {
        throw TrainingDiverged(0, -1);
    }
    if (!std::isfinite(result.initial_loss)) {
        throw TrainingDiverged(0, -1);
    }
    AdamState adam(params, AdamOptions::from(config));
    Rng rng(seed);
    Rng* dropout_rng = config.dropout > 0.0 ? &rng : nullptr;
    int last_finite = -1;
    for (int it = 0; it < config.iterations; ++it) {
        ForwardResult fr;
        try {
            fr = forward(params, window, config.dropout, dropout_rng);
        } catch (const NumericError&) {
            throw TrainingDiverged(it, last_finite);
        }
        const double loss = mse_loss(fr.outputs, targets);
        if (!std::isfinite(loss)) {
            throw TrainingDiverged(it, last_finite);
        }
        last_finite = it;
        adam_step(params, backward(params, fr, targets), adam);
        if (!params.all_finite()) {
            throw TrainingDiverged(it + 1, last_finite);
        }
        ++result.iterations;
    }
    try {
        result.final_loss = mse_loss(forward(params, window).outputs, targets);
    } catch (const NumericError&) {
        throw TrainingDiverged(config.iterations, last_finite);
    }
    return result;
}

std::string checkpoint_text(const NetworkConfig& c, const NetworkParams& params) {
    std::ostringstream out;
    out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    out << "num_layers " << c.num_layers << '\n'
        << "hidden_size " << c.hidden_size << '\n'
        << "window " << c.window << '\n'
        << "dropout " << format_double(c.dropout) << '\n'
        << "input_size " << c.input_size << '\n'
        << "output_size " << c.output_size << '\n'
        << "batch_size " << c.batch_size << '\n'
        << "iterations " << c.iterations << '\n'
        << "per_position_bias " << (c.per_position_bias ? 1 : 0) << '\n'
        << "learning_rate " << format_double(c.learning_rate) << '\n'
        << "decay_rate " << format_double(c.decay_rate) << '\n'
        << "decay_steps " << c.decay_steps << '\n'
        << "beta1 " << format_double(c.beta1) << '\n'
        << "beta2 " << format_double(c.beta2) << '\n'
        << "adam_epsilon " << format_double(c.adam_epsilon) << '\n'
        << "normalize " << (c.normalize ? 1 : 0) << '\n'
        << "warm_start " << (c.warm_start ? 1 : 0) << '\n'
        << "seed " << c.seed << '\n';
    params.for_each([&](const std::string& name, const MatrixXd& m) {
        out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
        for (Index r = 0; r < m.rows(); ++r) {
            for (Index col = 0; col < m.cols(); ++col) {
                if (col) out << ' ';
                out << format_double(m(r, col));
            }
            out << '\n';
        }
    });
    out << "end\n";
    return out.str();
}

void save_checkpoint(const std::filesystem::path& path, const NetworkConfig& config, const NetworkParams& params) {
    write_file_atomic(path, checkpoint_text(config, params));
}

Checkpoint parse_checkpoint(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kCheckpointMagic) {
        throw DataError("not a checkpoint file");
    }
    if (version != kCheckpointVersion) {
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint cp;
    auto& c = cp.config;
    auto read_double = [&](double& dst) {
        std::string tok;
        in >> tok;
        auto v = parse_double(tok);
        if (!v) throw DataError("checkpoint: bad number '" + tok + "'");
        dst = *v;
    };
    std::string key;
    while (in >> key && key != "tensor") {
        int flag = 0;
        if (key == "num_layers") in >> c.num_layers;
        else if (key == "hidden_size") in >> c.hidden_size;
        else if (key == "window") in >> c.window;
        else if (key == "dropout") read_double(c.dropout);
        else if (key == "input_size") in >> c.input_size;
        else if (key == "output_size") in >> c.output_size;
        else if (key == "batch_size") in >> c.batch_size;
        else if (key == "iterations") in >> c.iterations;
        else if (key == "per_position_bias") { in >> flag; c.per_position_bias = flag != 0; }
        else if (key == "learning_rate") read_double(c.learning_rate);
        else if (key == "decay_rate") read_double(c.decay_rate);
        else if (key == "decay_steps") in >> c.decay_steps;
        else if (key == "beta1") read_double(c.beta1);
        else if (key == "beta2") read_double(c.beta2);
        else if (key == "adam_epsilon") read_double(c.adam_epsilon);
        else if (key == "normalize") { in >> flag; c.normalize = flag != 0; }
        else if (key == "warm_start") { in >> flag; c.warm_start = flag != 0; }
        else if (key == "seed") in >> c.seed;
        else throw DataError("checkpoint: unknown key '" + key + "'");
        if (!in) throw DataError("checkpoint: bad value for '" + key + "'");
    }
    try {
        cp.params = NetworkParams::zeros(c);
    } catch (const ConfigError& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    }
    bool first = true;
    cp.params.for_each([&](const std::string& name, MatrixXd& m) {
        if (!first) in >> key;
        first = false;
        std::string tname;
        Index rows = 0;
        Index cols = 0;
        if (key != "tensor" || !(in >> tname >> rows >> cols) || tname != name || rows != m.rows() ||
            cols != m.cols()) {
            throw DataError("checkpoint: expected tensor " + name + " with shape " +
                            std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
        }
        for (Index r = 0; r < rows; ++r) {
            for (Index col = 0; col < cols; ++col) read_double(m(r, col));
        }
    });
    if (!(in >> key) || key != "end") {
        throw DataError("checkpoint: missing end marker");
    }
    return cp;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return parse_checkpoint(read_file(path));
}

}  // namespace lstmtrade

#pragma once

#include "lstmtrade/errors.hpp"
#include "lstmtrade/io.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace lstmtrade {

struct NetworkConfig {
    int num_layers = 3;
    int hidden_size = 64;
    int window = 22;
    double dropout = 0.5;
    int input_size = 6;
    int output_size = 1;
    int batch_size = 1;
    int iterations = 1600;

    // One dense bias per sequence position; false gives a single shared bias.
    bool per_position_bias = true;

    double learning_rate = 0.01;
    double decay_rate = 0.96;
    int decay_steps = 100;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;

    // Rolling-run options.
    bool normalize = true;
    bool warm_start = true;

    std::uint64_t seed = 0;

    void validate() const;
    /// Architecture-only key, e.g. "L3-H64-T22-D0.5".
    std::string architecture_key() const;
    std::size_t parameter_count() const;

    bool operator==(const NetworkConfig&) const = default;
};

/// Gate blocks are stored side by side in the order input, output, forget, candidate.
enum class Gate : int { input = 0, output = 1, forget = 2, candidate = 3 };

struct LstmLayerParams {
    Eigen::MatrixXd w_x;  // in x 4H
    Eigen::MatrixXd w_h;  // H x 4H
    Eigen::MatrixXd bias; // 1 x 4H

    auto input_weights(Gate g) { return w_x.middleCols(static_cast<int>(g) * hidden(), hidden()); }
    auto recurrent_weights(Gate g) { return w_h.middleCols(static_cast<int>(g) * hidden(), hidden()); }
    auto gate_bias(Gate g) { return bias.middleCols(static_cast<int>(g) * hidden(), hidden()); }
    auto input_weights(Gate g) const { return w_x.middleCols(static_cast<int>(g) * hidden(), hidden()); }
    auto recurrent_weights(Gate g) const { return w_h.middleCols(static_cast<int>(g) * hidden(), hidden()); }
    auto gate_bias(Gate g) const { return bias.middleCols(static_cast<int>(g) * hidden(), hidden()); }

    Eigen::Index hidden() const { return w_h.rows(); }
};

struct NetworkParams {
    std::vector<LstmLayerParams> layers;
    Eigen::MatrixXd w_out;  // H x 1
    Eigen::MatrixXd b_out;  // T x 1, or 1 x 1 when shared

    /// Zero-filled parameters with the shapes implied by `config`.
    static NetworkParams zeros(const NetworkConfig& config);

    /// Visits every tensor with a stable name, in a fixed order.
    void for_each(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn);
    void for_each(const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const;

    std::size_t size() const;
    bool all_finite() const;
    bool same_shape(const NetworkParams& other) const;
    bool operator==(const NetworkParams& other) const;
};

NetworkParams init_glorot(const NetworkConfig& config, std::uint64_t seed);

struct LayerCache {
    Eigen::MatrixXd input;  // after dropout
    Eigen::MatrixXd mask;   // empty when dropout is off
    Eigen::MatrixXd i, o, f, g, c, tanh_c, h;
};

struct ForwardResult {
    Eigen::VectorXd outputs;         // position k predicts the day after input row k
    Eigen::MatrixXd stacked_hidden;  // T x H, last layer
    std::vector<LayerCache> layers;
};

/// `rng` enables training-mode inverted dropout on every layer's input; null means inference.
ForwardResult forward(const NetworkParams& params, const Eigen::MatrixXd& window, double dropout = 0.0,
                      Rng* rng = nullptr);

double mse_loss(const Eigen::VectorXd& outputs, const Eigen::VectorXd& targets);

/// Exact gradient of `loss_scale * mse_loss` for the pass recorded in `cache`.
NetworkParams backward(const NetworkParams& params, const ForwardResult& cache,
                       const Eigen::VectorXd& targets, double loss_scale = 1.0);

struct AdamOptions {
    double learning_rate = 0.01;
    double decay_rate = 0.96;
    int decay_steps = 100;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamOptions from(const NetworkConfig& config);
};

struct AdamState {
    AdamOptions options;
    NetworkParams m;
    NetworkParams v;
    std::int64_t step = 0;

    AdamState(const NetworkParams& like, AdamOptions opts);
    /// Learning rate applied to the next update: base * decay^(step / decay_steps).
    double learning_rate() const;
};

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state);

class TrainingDiverged : public NumericError {
public:
    TrainingDiverged(int iteration, int last_finite)
        : NumericError("training diverged at iteration " + std::to_string(iteration) +
                       " (last finite iteration " + std::to_string(last_finite) + ")"),
          iteration_(iteration),
          last_finite_(last_finite) {}

    int iteration() const { return iteration_; }
    int last_finite_iteration() const { return last_finite_; }

private:
    int iteration_;
    int last_finite_;
};

struct TrainResult {
    double initial_loss = 0.0;  // inference-mode loss before the first update
    double final_loss = 0.0;    // inference-mode loss after the last update
    int iterations = 0;
};

/// Runs `config.iterations` forward/backward/ADAM cycles on one window (batch of one).
/// ADAM moments and the decay schedule start fresh on every call.
TrainResult train_on_window(NetworkParams& params, const Eigen::MatrixXd& window,
                            const Eigen::VectorXd& targets, const NetworkConfig& config,
                            std::uint64_t seed);

void save_checkpoint(const std::filesystem::path& path, const NetworkConfig& config,
                     const NetworkParams& params);
std::string checkpoint_text(const NetworkConfig& config, const NetworkParams& params);

struct Checkpoint {
    NetworkConfig config;
    NetworkParams params;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint parse_checkpoint(std::string_view text);

}  // namespace lstmtrade

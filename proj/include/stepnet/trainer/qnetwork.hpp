#pragma once

#include "stepnet/des/rng.hpp"
#include "stepnet/env/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace stepnet::trainer {

/// Fully connected ReLU network; the last layer is linear. Columns of the
/// input matrix are samples.
class QNetwork {
public:
    /// `layers` = {inputs, hidden..., outputs}; at least two entries.
    explicit QNetwork(std::vector<std::size_t> layers);

    /// Weights and biases uniform in +-1/sqrt(fan_in).
    void initialise(des::RngStream& rng);

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
    Eigen::VectorXd q_values(const env::Observation& obs) const;

    /// Mean over the batch of (Q(x_i, a_i) - y_i)^2 and its gradient with
    /// respect to parameters() (same layout).
    double td_loss(const Eigen::MatrixXd& x, const std::vector<std::uint64_t>& actions, const Eigen::VectorXd& targets,
                   std::vector<double>* gradient) const;

    /// Flattened per layer: weights (column-major), then biases.
    std::vector<double> parameters() const;
    void set_parameters(const std::vector<double>& params);
    std::size_t parameter_count() const;

    const std::vector<std::size_t>& layers() const noexcept { return layers_; }
    std::size_t inputs() const noexcept { return layers_.front(); }
    std::size_t outputs() const noexcept { return layers_.back(); }

    bool finite() const;

private:
    std::vector<std::size_t> layers_;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
};

} // namespace stepnet::trainer

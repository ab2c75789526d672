#include "stepnet/trainer/qnetwork.hpp"

#include "stepnet/errors.hpp"

#include <cmath>

namespace stepnet::trainer {

QNetwork::QNetwork(std::vector<std::size_t> layers) : layers_(std::move(layers)) {
    if (layers_.size() < 2) {
        throw ConfigError({"network: need at least an input and an output layer"});
    }
    for (const auto n : layers_) {
        if (n == 0) {
            throw ConfigError({"network: layer sizes must be positive"});
        }
    }
    for (std::size_t l = 1; l < layers_.size(); ++l) {
        const auto rows = static_cast<Eigen::Index>(layers_[l]);
        const auto cols = static_cast<Eigen::Index>(layers_[l - 1]);
        weights_.emplace_back(Eigen::MatrixXd::Zero(rows, cols));
        biases_.emplace_back(Eigen::VectorXd::Zero(rows));
    }
}

void QNetwork::initialise(des::RngStream& rng) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(weights_[l].cols()));
        for (Eigen::Index j = 0; j < weights_[l].cols(); ++j) {
            for (Eigen::Index i = 0; i < weights_[l].rows(); ++i) {
                weights_[l](i, j) = rng.uniform(-bound, bound);
            }
        }
        for (Eigen::Index i = 0; i < biases_[l].size(); ++i) {
            biases_[l](i) = rng.uniform(-bound, bound);
        }
    }
}

Eigen::MatrixXd QNetwork::forward(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Eigen::MatrixXd z = (weights_[l] * a).colwise() + biases_[l];
        a = l + 1 < weights_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    return a;
}

Eigen::VectorXd QNetwork::q_values(const env::Observation& obs) const {
    if (obs.size() != inputs()) {
        throw IndexOutOfRange("observation length " + std::to_string(obs.size()) + " but network expects " +
                              std::to_string(inputs()));
    }
    const Eigen::Map<const Eigen::VectorXd> x(obs.data(), static_cast<Eigen::Index>(obs.size()));
    return forward(x);
}

double QNetwork::td_loss(const Eigen::MatrixXd& x, const std::vector<std::uint64_t>& actions,
                         const Eigen::VectorXd& targets, std::vector<double>* gradient) const {
    const std::size_t depth = weights_.size();
    const Eigen::Index batch = x.cols();
    std::vector<Eigen::MatrixXd> act(depth + 1);
    std::vector<Eigen::MatrixXd> pre(depth);
    act[0] = x;
    for (std::size_t l = 0; l < depth; ++l) {
        pre[l] = (weights_[l] * act[l]).colwise() + biases_[l];
        act[l + 1] = l + 1 < depth ? Eigen::MatrixXd(pre[l].cwiseMax(0.0)) : pre[l];
    }
    const Eigen::MatrixXd& q = act[depth];

    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(q.rows(), batch);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < batch; ++i) {
        const auto a = static_cast<Eigen::Index>(actions[static_cast<std::size_t>(i)]);
        if (a >= q.rows()) {
            throw IndexOutOfRange("action index " + std::to_string(a) + " outside network outputs");
        }
        const double err = q(a, i) - targets(i);
        loss += err * err;
        delta(a, i) = 2.0 * err / static_cast<double>(batch);
    }
    loss /= static_cast<double>(batch);
    if (gradient == nullptr) {
        return loss;
    }

    std::vector<Eigen::MatrixXd> grad_w(depth);
    std::vector<Eigen::VectorXd> grad_b(depth);
    for (std::size_t l = depth; l-- > 0;) {
        grad_w[l] = delta * act[l].transpose();
        grad_b[l] = delta.rowwise().sum();
        if (l > 0) {
            delta = (weights_[l].transpose() * delta).cwiseProduct(
                pre[l - 1].unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
        }
    }
    gradient->clear();
    gradient->reserve(parameter_count());
    for (std::size_t l = 0; l < depth; ++l) {
        gradient->insert(gradient->end(), grad_w[l].data(), grad_w[l].data() + grad_w[l].size());
        gradient->insert(gradient->end(), grad_b[l].data(), grad_b[l].data() + grad_b[l].size());
    }
    return loss;
}

std::vector<double> QNetwork::parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.insert(out.end(), weights_[l].data(), weights_[l].data() + weights_[l].size());
        out.insert(out.end(), biases_[l].data(), biases_[l].data() + biases_[l].size());
    }
    return out;
}

void QNetwork::set_parameters(const std::vector<double>& params) {
    if (params.size() != parameter_count()) {
        throw IndexOutOfRange("parameter vector has " + std::to_string(params.size()) + " entries, network has " +
                              std::to_string(parameter_count()));
    }
    const double* p = params.data();
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        std::copy(p, p + weights_[l].size(), weights_[l].data());
        p += weights_[l].size();
        std::copy(p, p + biases_[l].size(), biases_[l].data());
        p += biases_[l].size();
    }
}

std::size_t QNetwork::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
    }
    return n;
}

bool QNetwork::finite() const {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        if (!weights_[l].allFinite() || !biases_[l].allFinite()) {
            return false;
        }
    }
    return true;
}

} // namespace stepnet::trainer

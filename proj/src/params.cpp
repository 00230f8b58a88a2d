#include "seaco/params.hpp"

#include <cmath>
#include <stdexcept>

namespace seaco {

ag::NodePtr ParamStore::add(const std::string& name, Tensor init, bool trainable) {
    if (entries_.count(name))
        throw std::invalid_argument("duplicate parameter name: " + name);
    Entry e;
    e.node = ag::leaf(std::move(init), trainable);
    e.trainable = trainable;
    auto [it, ok] = entries_.emplace(name, std::move(e));
    (void)ok;
    return it->second.node;
}

ag::NodePtr ParamStore::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::invalid_argument("unknown parameter: " + name);
    return it->second.node;
}

bool ParamStore::has(const std::string& name) const { return entries_.count(name) > 0; }

ParamStore::Entry& ParamStore::entry(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::invalid_argument("unknown parameter: " + name);
    return it->second;
}

void ParamStore::set_trainable_prefix(const std::string& prefix, bool trainable) {
    for (auto& [name, e] : entries_) {
        if (name.rfind(prefix, 0) == 0) {
            e.trainable = trainable;
            e.node->requires_grad = trainable;
        }
    }
}

void ParamStore::zero_grads() {
    for (auto& [name, e] : entries_) {
        (void)name;
        std::fill(e.node->grad.data.begin(), e.node->grad.data.end(), 0.0);
    }
}

std::map<std::string, Tensor> ParamStore::snapshot() const {
    return snapshot_prefix("");
}

std::map<std::string, Tensor> ParamStore::snapshot_prefix(const std::string& prefix) const {
    std::map<std::string, Tensor> out;
    for (const auto& [name, e] : entries_)
        if (name.rfind(prefix, 0) == 0) out.emplace(name, e.node->value);
    return out;
}

void Adam::step(ParamStore& ps) {
    ++t;
    double bc1 = 1.0 - std::pow(beta1, double(t));
    double bc2 = 1.0 - std::pow(beta2, double(t));
    for (auto& [name, e] : ps.all()) {
        (void)name;
        if (!e.trainable || e.node->grad.data.empty()) continue;
        if (e.m.data.empty()) {
            e.m = Tensor(e.node->value.shape);
            e.v = Tensor(e.node->value.shape);
        }
        for (size_t i = 0; i < e.node->value.size(); ++i) {
            double g = e.node->grad.data[i];
            e.m.data[i] = beta1 * e.m.data[i] + (1.0 - beta1) * g;
            e.v.data[i] = beta2 * e.v.data[i] + (1.0 - beta2) * g * g;
            double mhat = e.m.data[i] / bc1;
            double vhat = e.v.data[i] / bc2;
            e.node->value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

Tensor uniform_init(std::vector<size_t> shape, double limit, std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> d(-limit, limit);
    for (double& v : t.data) v = d(rng);
    return t;
}

Tensor xavier_uniform(std::vector<size_t> shape, std::mt19937_64& rng) {
    size_t fan_in = shape.size() >= 2 ? shape[0] : 1;
    size_t fan_out = shape.size() >= 2 ? shape[1] : shape[0];
    double limit = std::sqrt(6.0 / double(fan_in + fan_out));
    return uniform_init(std::move(shape), limit, rng);
}

}  // namespace seaco

#ifndef SEACO_PARAMS_HPP
#define SEACO_PARAMS_HPP

#include <map>
#include <random>
#include <string>
#include <vector>

#include "seaco/autograd.hpp"
#include "seaco/tensor.hpp"

namespace seaco {

// Named parameter collection. Leaves are persistent autograd nodes; the
// optimizer updates values in place and only touches trainable entries.
class ParamStore {
public:
    struct Entry {
        ag::NodePtr node;
        bool trainable = true;
        Tensor m, v;  // Adam state
    };

    ag::NodePtr add(const std::string& name, Tensor init, bool trainable = true);
    ag::NodePtr get(const std::string& name) const;
    bool has(const std::string& name) const;
    Entry& entry(const std::string& name);

    void set_trainable_prefix(const std::string& prefix, bool trainable);
    void zero_grads();

    // name -> value copies, for snapshots and freezing checks.
    std::map<std::string, Tensor> snapshot() const;
    std::map<std::string, Tensor> snapshot_prefix(const std::string& prefix) const;

    std::map<std::string, Entry>& all() { return entries_; }
    const std::map<std::string, Entry>& all() const { return entries_; }

private:
    std::map<std::string, Entry> entries_;
};

struct Adam {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-9;
    size_t t = 0;

    void step(ParamStore& ps);
};

// Uniform(-limit, limit) init with limit = sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(std::vector<size_t> shape, std::mt19937_64& rng);
Tensor uniform_init(std::vector<size_t> shape, double limit, std::mt19937_64& rng);

}  // namespace seaco

#endif

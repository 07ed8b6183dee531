#pragma once

// Fixed-topology reservoirs: random sparse ESN and simple cycle reservoir.

#include "rscn/reservoir.hpp"
#include "rscn/tasks.hpp"

#include <cstdint>
#include <string_view>

namespace rscn {

enum class Topology { esn_random, scr_ring };

std::string_view to_string(Topology t);
Topology parse_topology(std::string_view s);

struct BaselineConfig {
    Index n_nodes = 100;
    double lambda = 1.0;
    double sparsity = 0.03;
    double esp_alpha = 0.9;
    Topology topology = Topology::esn_random;
    double ring_weight = 0.9;
    FeedbackScaling scaling = FeedbackScaling::contraction;
    Activation activation = Activation::tanh;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Random reservoir with W_r scaled to sigma_max = esp_alpha (or rho with
/// eq22 scaling) and a least-squares readout on post-washout columns.
ReservoirModel build_esn(const BaselineConfig& cfg, const SupervisedSequence& train,
                         double ridge = 0.0);

/// Ring reservoir W_r[i][(i-1) mod N] = ring_weight.
ReservoirModel build_scr(const BaselineConfig& cfg, const SupervisedSequence& train,
                         double ridge = 0.0);

/// Dispatches on cfg.topology.
ReservoirModel build_baseline(const BaselineConfig& cfg, const SupervisedSequence& train,
                              double ridge = 0.0);

/// Re-solves the readout of a fixed reservoir on post-washout columns.
ReservoirModel fit_readout(ReservoirModel model, const SupervisedSequence& train,
                           double ridge = 0.0);

} // namespace rscn

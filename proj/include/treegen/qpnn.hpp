#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "treegen/fock.hpp"
#include "treegen/mesh.hpp"

namespace treegen::qpnn {

using fock::Matrix;
using fock::StateVector;
using fock::TrainingPair;

// Layered network: alternating programmable meshes and fixed Kerr-type
// phase screens. L meshes, L-1 nonlinear screens between them.
struct QPNN {
    int modes = 0;
    int layers = 0;
    double phi1 = 0.0;
    double phi2 = M_PI;
    std::vector<mesh::MeshParams> params;      // one per layer
    std::vector<mesh::MeshInstance> instances; // one per layer

    static QPNN ideal(int modes, int layers);
    static QPNN sampled(int modes, int layers, const mesh::HardwareModel& hardware, Rng& rng);

    int params_per_layer() const { return 2 * mesh::mesh_unit_count(modes) + modes; }
    int param_count() const { return layers * params_per_layer(); }

    std::vector<double> flat_params() const;
    void set_flat_params(const std::vector<double>& flat);
};

// Blueprint for trials: geometry plus the component-loss model that each
// trial samples its own instance from.
struct NetworkSpec {
    int modes = 0;
    int layers = 0;
    double phi1 = 0.0;
    double phi2 = M_PI;
    mesh::HardwareModel hardware;
};

StateVector system_apply(const QPNN& net, const StateVector& state);

double cost(const QPNN& net, const std::vector<TrainingPair>& set);

struct FidelityReport {
    double network = 0.0;
    std::map<std::string, double> per_operation;  // keyed by configuration label
};

FidelityReport fidelity(const QPNN& net, const std::vector<TrainingPair>& set);

// Minimum cost reachable given the sampled component losses alone: the mean
// per-MZI power transmission raised to the m*L columns a photon crosses,
// averaged over the set's photon numbers.
double loss_limit(const QPNN& net, const std::vector<TrainingPair>& set);

// d(cost)/d(param) for every phi, theta and output phase, layer by layer in
// flat_params() order. Matches central finite differences to 1e-4 relative.
std::vector<double> gradient(const QPNN& net, const std::vector<TrainingPair>& set);

// Cost and gradient in one pass (shared forward sweep).
double cost_and_gradient(const QPNN& net, const std::vector<TrainingPair>& set,
                         std::vector<double>& grad);

struct TrainingConfig {
    int epochs = 1000;
    double learning_rate = 0.05;
    double decay = 0.9;        // multiplicative factor applied every `decay_period` epochs
    int decay_period = 100;
    int trials = 1;
    std::uint64_t seed = 0;
    fock::BasisChoice basis_choice = fock::BasisChoice::Restricted;
    int threads = 1;

    void validate() const;
};

struct TrialResult {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string message;
    std::vector<double> trajectory;  // cost after 0..epochs steps
    QPNN network;                    // best-cost parameters
    double final_cost = 0.0;         // best cost seen
    double loss_limit = 0.0;
    FidelityReport fidelities;
};

struct TrainSummary {
    std::vector<TrialResult> trials;
    int best_trial = -1;  // lowest final cost among ok trials

    const TrialResult& best() const;
};

// One optimization trial: sample components, initialize each layer from the
// Clements decomposition of an independent Haar unitary, run exactly
// config.epochs Adam steps. Fully reproducible from the trial seed.
TrialResult train_trial(const NetworkSpec& spec, const std::vector<TrainingPair>& set,
                        const TrainingConfig& config, int trial_index);

// Campaign across config.trials trials (trial seeds = seed ^ index), run in
// parallel up to config.threads.
TrainSummary train(const NetworkSpec& spec, const std::vector<TrainingPair>& set,
                   const TrainingConfig& config);

// Optimization-success cost threshold 1 - factor*(1 - loss_limit); factor is
// 0.90 for the single platform and 0.98 otherwise.
double success_threshold(const std::string& preset, double loss_limit);

}  // namespace treegen::qpnn

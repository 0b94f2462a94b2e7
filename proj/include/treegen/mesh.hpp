#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "treegen/rng.hpp"

namespace treegen::mesh {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Matrix2 = Eigen::Matrix2cd;

struct DirectionalCoupler {
    double t = 0.5;        // power transmission fraction
    double loss_db = 0.0;  // insertion loss
};

struct MZIComponent {
    DirectionalCoupler dc1;  // input-side coupler, cross terms +i
    DirectionalCoupler dc2;  // output-side coupler, cross terms -i
    double theta = 0.0;      // internal phase shift is 2*theta
    double phi = 0.0;        // external phase, ahead of dc1 on the upper arm
    double loss_db = 0.0;    // total insertion loss of the unit
};

// 2x2 transfer: dc2 * diag(e^{i2theta},1) * dc1 * diag(e^{iphi},1), scaled by
// the amplitude factor 10^(-loss_db/20). theta = 0 is the bar (pass-through)
// setting under this convention.
Matrix2 mzi_transfer(const MZIComponent& unit);
Matrix2 coupler_transfer(double t, bool conjugate_cross);

// Port extinction ratio in dB at the switching setting limited by coupler
// imbalance; evaluated at both internal phase settings, the finite one binds.
double mzi_extinction_db(double t1, double t2);

struct HardwareModel {
    std::string name;
    double dc_loss_db = 0.0;
    double ps_loss_db = 0.0;
    double switch_loss_db_per_stage = 0.0;
    double coupling_loss_db = 0.0;
    double mzi_loss_mean_db = 0.0;   // = 2*dc + 2*ps for the presets
    double mzi_loss_sigma_db = 0.0;
    double dc_split_mean = 0.5;
    double dc_split_sigma = 0.005;
    double fiber_loss_db_per_km = 0.17;
    double group_index = 1.462;

    static HardwareModel single();
    static HardwareModel multi();
    static HardwareModel future();
    static HardwareModel lossless();
    static HardwareModel preset(const std::string& name);
};

// One sampled MZI: coupler splits and unit loss drawn from the model.
struct SampledUnit {
    double t1 = 0.5;
    double t2 = 0.5;
    double loss_db = 0.0;
};

std::vector<SampledUnit> sample_hardware(const HardwareModel& model, int units, Rng& rng);

// Rectangular Clements grid slot: unit k couples modes (pair, pair+1) and
// sits in column `col` (0-based; column parity equals pair parity).
struct GridSlot {
    int col = 0;
    int pair = 0;
};

// Fixed unit ordering for an m-mode mesh: the order in which the Clements
// nulling procedure emits units, which is also the order build_mesh consumes.
// Grid columns are reconstructed by as-soon-as-possible scheduling.
std::vector<GridSlot> mesh_grid(int modes);

inline int mesh_unit_count(int modes) { return modes * (modes - 1) / 2; }

struct MeshParams {
    std::vector<double> phi;     // per unit, canonical order
    std::vector<double> theta;   // per unit
    std::vector<double> screen;  // m output phases

    static MeshParams zeros(int modes);
};

// A physical mesh: sampled components on the fixed grid. Pass-through modes
// in each column carry the instance-mean per-MZI loss so that every photon
// path crosses exactly m loss elements.
struct MeshInstance {
    int modes = 0;
    std::vector<GridSlot> grid;
    std::vector<SampledUnit> units;

    static MeshInstance ideal(int modes);
    static MeshInstance sampled(int modes, const HardwareModel& model, Rng& rng);

    // Arithmetic mean of per-unit power transmissions 10^(-loss/10).
    double mean_unit_power_transmission() const;
};

Matrix build_mesh(const MeshParams& params, const MeshInstance& instance);

// Per-column partial products used by the training gradients:
// prefix[c] = C_{c-1}...C_0 (prefix[0] = I), suffix[c] = S*C_{m-1}...C_{c+1}.
struct MeshProducts {
    Matrix full;
    std::vector<Matrix> prefix;
    std::vector<Matrix> suffix;
    std::vector<Matrix> column;  // C_c including pass-through loss factors
};

MeshProducts build_mesh_products(const MeshParams& params, const MeshInstance& instance);

Matrix haar_random_unitary(int modes, Rng& rng);

// Extracts (phi, theta, screen) such that build_mesh with ideal components
// reproduces U. U must be unitary to 1e-8.
MeshParams clements_decompose(const Matrix& u);

}  // namespace treegen::mesh

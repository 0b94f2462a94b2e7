#include "treegen/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace treegen::mesh {

namespace {

constexpr double kPi = 3.14159265358979323846;

double db_to_amplitude(double db) { return std::pow(10.0, -db / 20.0); }

struct NullingOp {
    bool left;  // left ops premultiply rows, right ops postmultiply columns
    int pair;   // 0-based upper mode index
    double theta = 0.0;
    double phi = 0.0;
};

// The order in which the Clements sweeps emit units, already arranged as the
// applied-first sequence consumed by build_mesh: all right ops in encounter
// order, then the left ops reversed.
std::vector<NullingOp> nulling_sequence(int m) {
    std::vector<NullingOp> rights, lefts;
    for (int l = 1; l <= m - 1; ++l) {
        if (l % 2 == 1) {
            for (int k = 0; k <= l - 1; ++k) rights.push_back({false, l - k - 1});
        } else {
            for (int k = 1; k <= l; ++k) lefts.push_back({true, m - l + k - 2});
        }
    }
    std::vector<NullingOp> seq = rights;
    for (auto it = lefts.rbegin(); it != lefts.rend(); ++it) seq.push_back(*it);
    return seq;
}

}  // namespace

Matrix2 coupler_transfer(double t, bool conjugate_cross) {
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("coupler_transfer: t outside [0,1]");
    double a = std::sqrt(t);
    double b = std::sqrt(1.0 - t);
    Complex cross = conjugate_cross ? Complex(0.0, -b) : Complex(0.0, b);
    Matrix2 u;
    u << a, cross, cross, a;
    return u;
}

Matrix2 mzi_transfer(const MZIComponent& unit) {
    Matrix2 dc1 = coupler_transfer(unit.dc1.t, false);
    Matrix2 dc2 = coupler_transfer(unit.dc2.t, true);
    Matrix2 inner = Matrix2::Zero();
    inner(0, 0) = std::polar(1.0, 2.0 * unit.theta);
    inner(1, 1) = 1.0;
    Matrix2 ext = Matrix2::Zero();
    ext(0, 0) = std::polar(1.0, unit.phi);
    ext(1, 1) = 1.0;
    return db_to_amplitude(unit.loss_db) * (dc2 * inner * dc1 * ext).eval();
}

double mzi_extinction_db(double t1, double t2) {
    double best = std::numeric_limits<double>::infinity();
    for (double theta : {0.0, kPi / 2.0}) {
        MZIComponent unit;
        unit.dc1.t = t1;
        unit.dc2.t = t2;
        unit.theta = theta;
        Matrix2 u = mzi_transfer(unit);
        double bar = std::norm(u(0, 0));
        double cross = std::norm(u(1, 0));
        double hi = std::max(bar, cross);
        double lo = std::min(bar, cross);
        if (lo <= 0.0) continue;  // perfect switching at this setting
        best = std::min(best, 10.0 * std::log10(hi / lo));
    }
    return best;
}

HardwareModel HardwareModel::single() {
    HardwareModel h;
    h.name = "single";
    h.dc_loss_db = 0.0005;
    h.ps_loss_db = 0.106;
    h.switch_loss_db_per_stage = 0.107;
    h.coupling_loss_db = 0.120;
    h.mzi_loss_mean_db = 0.2130;
    h.mzi_loss_sigma_db = 0.0124;
    return h;
}

HardwareModel HardwareModel::multi() {
    HardwareModel h;
    h.name = "multi";
    h.dc_loss_db = 0.0005;
    h.ps_loss_db = 0.010;
    h.switch_loss_db_per_stage = 0.061;
    h.coupling_loss_db = 0.120;
    h.mzi_loss_mean_db = 0.0210;
    h.mzi_loss_sigma_db = 0.0016;
    return h;
}

HardwareModel HardwareModel::future() {
    HardwareModel h;
    h.name = "future";
    h.dc_loss_db = 0.00005;
    h.ps_loss_db = 0.001;
    h.switch_loss_db_per_stage = 0.0061;
    h.coupling_loss_db = 0.0120;
    h.mzi_loss_mean_db = 0.00210;
    h.mzi_loss_sigma_db = 0.00016;
    return h;
}

HardwareModel HardwareModel::lossless() {
    HardwareModel h;
    h.name = "lossless";
    h.dc_split_sigma = 0.0;
    h.fiber_loss_db_per_km = 0.0;
    return h;
}

HardwareModel HardwareModel::preset(const std::string& name) {
    if (name == "single") return single();
    if (name == "multi") return multi();
    if (name == "future") return future();
    if (name == "lossless") return lossless();
    throw std::invalid_argument("unknown hardware preset: " + name);
}

std::vector<SampledUnit> sample_hardware(const HardwareModel& model, int units, Rng& rng) {
    std::vector<SampledUnit> out(static_cast<std::size_t>(units));
    for (auto& u : out) {
        u.t1 = std::clamp(rng.normal(model.dc_split_mean, model.dc_split_sigma), 0.0, 1.0);
        u.t2 = std::clamp(rng.normal(model.dc_split_mean, model.dc_split_sigma), 0.0, 1.0);
        u.loss_db = std::max(0.0, rng.normal(model.mzi_loss_mean_db, model.mzi_loss_sigma_db));
    }
    return out;
}

std::vector<GridSlot> mesh_grid(int modes) {
    if (modes < 2) throw std::invalid_argument("mesh_grid: need at least two modes");
    auto seq = nulling_sequence(modes);
    std::vector<GridSlot> grid(seq.size());
    std::vector<int> next_free(static_cast<std::size_t>(modes), 0);
    for (std::size_t k = 0; k < seq.size(); ++k) {
        int p = seq[k].pair;
        int col = std::max(next_free[p], next_free[p + 1]);
        if ((col % 2) != (p % 2)) ++col;  // columns host pairs of matching parity
        grid[k] = {col, p};
        next_free[p] = col + 1;
        next_free[p + 1] = col + 1;
    }
    // The schedule must land exactly on the rectangular arrangement.
    std::vector<std::vector<bool>> seen(static_cast<std::size_t>(modes),
                                        std::vector<bool>(static_cast<std::size_t>(modes), false));
    for (const auto& g : grid) {
        if (g.col < 0 || g.col >= modes) throw std::logic_error("mesh_grid: column overflow");
        if (seen[g.col][g.pair]) throw std::logic_error("mesh_grid: duplicate slot");
        seen[g.col][g.pair] = true;
    }
    return grid;
}

MeshParams MeshParams::zeros(int modes) {
    MeshParams p;
    p.phi.assign(static_cast<std::size_t>(mesh_unit_count(modes)), 0.0);
    p.theta.assign(static_cast<std::size_t>(mesh_unit_count(modes)), 0.0);
    p.screen.assign(static_cast<std::size_t>(modes), 0.0);
    return p;
}

MeshInstance MeshInstance::ideal(int modes) {
    MeshInstance inst;
    inst.modes = modes;
    inst.grid = mesh_grid(modes);
    inst.units.assign(inst.grid.size(), SampledUnit{});
    return inst;
}

MeshInstance MeshInstance::sampled(int modes, const HardwareModel& model, Rng& rng) {
    MeshInstance inst;
    inst.modes = modes;
    inst.grid = mesh_grid(modes);
    inst.units = sample_hardware(model, static_cast<int>(inst.grid.size()), rng);
    return inst;
}

double MeshInstance::mean_unit_power_transmission() const {
    if (units.empty()) return 1.0;
    double sum = 0.0;
    for (const auto& u : units) sum += std::pow(10.0, -u.loss_db / 10.0);
    return sum / static_cast<double>(units.size());
}

namespace {

void check_sizes(const MeshParams& params, const MeshInstance& instance) {
    std::size_t k = instance.grid.size();
    if (params.phi.size() != k || params.theta.size() != k ||
        params.screen.size() != static_cast<std::size_t>(instance.modes) ||
        instance.units.size() != k)
        throw std::invalid_argument("build_mesh: parameter/component size mismatch");
}

std::vector<Matrix> column_matrices(const MeshParams& params, const MeshInstance& instance) {
    const int m = instance.modes;
    double pass_amp = std::sqrt(instance.mean_unit_power_transmission());
    std::vector<Matrix> cols(static_cast<std::size_t>(m));
    std::vector<std::vector<bool>> covered(static_cast<std::size_t>(m),
                                           std::vector<bool>(static_cast<std::size_t>(m), false));
    for (int c = 0; c < m; ++c) cols[c] = Matrix::Identity(m, m);
    for (std::size_t k = 0; k < instance.grid.size(); ++k) {
        const GridSlot& g = instance.grid[k];
        MZIComponent unit;
        unit.dc1.t = instance.units[k].t1;
        unit.dc2.t = instance.units[k].t2;
        unit.loss_db = instance.units[k].loss_db;
        unit.theta = params.theta[k];
        unit.phi = params.phi[k];
        Matrix2 t = mzi_transfer(unit);
        Matrix& col = cols[static_cast<std::size_t>(g.col)];
        col(g.pair, g.pair) = t(0, 0);
        col(g.pair, g.pair + 1) = t(0, 1);
        col(g.pair + 1, g.pair) = t(1, 0);
        col(g.pair + 1, g.pair + 1) = t(1, 1);
        covered[g.col][g.pair] = true;
        covered[g.col][g.pair + 1] = true;
    }
    for (int c = 0; c < m; ++c)
        for (int mode = 0; mode < m; ++mode)
            if (!covered[c][mode]) cols[c](mode, mode) = pass_amp;
    return cols;
}

Matrix screen_matrix(const MeshParams& params, int m) {
    Matrix s = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) s(i, i) = std::polar(1.0, params.screen[static_cast<std::size_t>(i)]);
    return s;
}

}  // namespace

Matrix build_mesh(const MeshParams& params, const MeshInstance& instance) {
    check_sizes(params, instance);
    const int m = instance.modes;
    auto cols = column_matrices(params, instance);
    Matrix u = Matrix::Identity(m, m);
    for (int c = 0; c < m; ++c) u = cols[static_cast<std::size_t>(c)] * u;
    return screen_matrix(params, m) * u;
}

MeshProducts build_mesh_products(const MeshParams& params, const MeshInstance& instance) {
    check_sizes(params, instance);
    const int m = instance.modes;
    MeshProducts out;
    out.column = column_matrices(params, instance);
    out.prefix.resize(static_cast<std::size_t>(m));
    out.suffix.resize(static_cast<std::size_t>(m));
    Matrix acc = Matrix::Identity(m, m);
    for (int c = 0; c < m; ++c) {
        out.prefix[static_cast<std::size_t>(c)] = acc;
        acc = out.column[static_cast<std::size_t>(c)] * acc;
    }
    Matrix screen = screen_matrix(params, m);
    out.full = screen * acc;
    acc = screen;
    for (int c = m - 1; c >= 0; --c) {
        out.suffix[static_cast<std::size_t>(c)] = acc;
        acc = acc * out.column[static_cast<std::size_t>(c)];
    }
    return out;
}

Matrix haar_random_unitary(int modes, Rng& rng) {
    if (modes < 1) throw std::invalid_argument("haar_random_unitary: modes >= 1");
    Matrix g(modes, modes);
    const double s = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < modes; ++i)
        for (int j = 0; j < modes; ++j) g(i, j) = Complex(rng.normal() * s, rng.normal() * s);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix the gauge so the distribution is Haar rather than QR-convention.
    for (int j = 0; j < modes; ++j) {
        Complex d = r(j, j);
        double mag = std::abs(d);
        Complex phase = (mag > 0.0) ? d / mag : Complex(1.0, 0.0);
        q.col(j) *= phase;
    }
    return q;
}

MeshParams clements_decompose(const Matrix& u_in) {
    const int m = static_cast<int>(u_in.rows());
    if (u_in.cols() != m || m < 2) throw std::invalid_argument("clements_decompose: square matrix, m >= 2");
    if ((u_in.adjoint() * u_in - Matrix::Identity(m, m)).cwiseAbs().maxCoeff() > 1e-8)
        throw std::invalid_argument("clements_decompose: input not unitary");

    Matrix u = u_in;
    std::vector<NullingOp> rights, lefts;

    // The physical unit is e^{i theta} times the textbook rotation; carrying
    // that phase through the sweeps keeps the final diagonal exact, because
    // it lives on the unit's two modes only and cannot be absorbed globally.
    auto solve_right = [&](int row, int col) {
        // (u * T^-1) zeroes u(row, col) against u(row, col+1); T acts on
        // columns (col, col+1).
        Complex x = u(row, col);
        Complex y = u(row, col + 1);
        double theta = std::atan2(std::abs(x), std::abs(y));
        double phi = (std::abs(x) == 0.0 ? 0.0 : std::arg(x)) - (std::abs(y) == 0.0 ? 0.0 : std::arg(y));
        Complex c = std::cos(theta);
        Complex s = std::sin(theta);
        Complex emphi = std::polar(1.0, -phi);
        Complex phase = std::polar(1.0, -theta);
        for (int r = 0; r < m; ++r) {
            Complex a = u(r, col);
            Complex b = u(r, col + 1);
            u(r, col) = phase * (emphi * c * a - s * b);
            u(r, col + 1) = phase * (emphi * s * a + c * b);
        }
        rights.push_back({false, col, theta, phi});
    };

    auto solve_left = [&](int row, int col) {
        // (T * u) zeroes u(row, col) against u(row-1, col); T acts on rows
        // (row-1, row).
        Complex up = u(row - 1, col);
        Complex lo = u(row, col);
        double theta = std::atan2(std::abs(lo), std::abs(up));
        double phi = (std::abs(lo) == 0.0 ? 0.0 : std::arg(lo)) -
                     (std::abs(up) == 0.0 ? 0.0 : std::arg(up)) + kPi;
        Complex c = std::cos(theta);
        Complex s = std::sin(theta);
        Complex ephi = std::polar(1.0, phi);
        Complex phase = std::polar(1.0, theta);
        for (int q = 0; q < m; ++q) {
            Complex a = u(row - 1, q);
            Complex b = u(row, q);
            u(row - 1, q) = phase * (ephi * c * a - s * b);
            u(row, q) = phase * (ephi * s * a + c * b);
        }
        lefts.push_back({true, row - 1, theta, phi});
    };

    for (int l = 1; l <= m - 1; ++l) {
        if (l % 2 == 1) {
            for (int k = 0; k <= l - 1; ++k) solve_right(m - 1 - k, l - 1 - k);
        } else {
            for (int k = 1; k <= l; ++k) solve_left(m - l + k - 1, k - 1);
        }
    }

    std::vector<double> diag_phase(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) diag_phase[static_cast<std::size_t>(i)] = std::arg(u(i, i));

    // Push each left-op inverse through the diagonal. For the physical unit,
    // T(theta,phi)^-1 diag(e^{ia}, e^{ib})
    //   = diag(e^{i(b-phi+pi-2 theta)}, e^{i(b-2 theta)}) T(theta, a-b+pi).
    for (auto it = lefts.rbegin(); it != lefts.rend(); ++it) {
        int p = it->pair;
        double a = diag_phase[static_cast<std::size_t>(p)];
        double b = diag_phase[static_cast<std::size_t>(p + 1)];
        double new_phi = a - b + kPi;
        diag_phase[static_cast<std::size_t>(p)] = b - it->phi + kPi - 2.0 * it->theta;
        diag_phase[static_cast<std::size_t>(p + 1)] = b - 2.0 * it->theta;
        it->phi = new_phi;
    }

    // Applied-first order: rights in encounter order, then lefts reversed.
    std::vector<NullingOp> seq = rights;
    for (auto it = lefts.rbegin(); it != lefts.rend(); ++it) seq.push_back(*it);

    MeshParams params = MeshParams::zeros(m);
    for (std::size_t k = 0; k < seq.size(); ++k) {
        params.phi[k] = seq[k].phi;
        params.theta[k] = seq[k].theta;
    }
    for (int i = 0; i < m; ++i)
        params.screen[static_cast<std::size_t>(i)] = diag_phase[static_cast<std::size_t>(i)];

    // Consistency with the fixed grid ordering.
    auto grid_seq = nulling_sequence(m);
    for (std::size_t k = 0; k < seq.size(); ++k)
        if (grid_seq[k].pair != seq[k].pair) throw std::logic_error("clements_decompose: sequence mismatch");

    return params;
}

}  // namespace treegen::mesh

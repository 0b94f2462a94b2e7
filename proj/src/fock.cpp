#include "treegen/fock.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace treegen::fock {

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

// Expands the state list into per-photon mode indices: occupation (2,0,1)
// becomes [0,0,2].
std::vector<int> repeat_indices(const Occupation& occ) {
    std::vector<int> idx;
    for (int mode = 0; mode < static_cast<int>(occ.size()); ++mode)
        for (int k = 0; k < occ[mode]; ++k) idx.push_back(mode);
    return idx;
}

double occupation_factorial(const Occupation& occ) {
    double f = 1.0;
    for (int v : occ) f *= factorial(v);
    return f;
}

bool lex_greater(const Occupation& a, const Occupation& b) {
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

Complex permanent(const Matrix& A, const std::vector<int>& rows, const std::vector<int>& cols) {
    const int n = static_cast<int>(rows.size());
    if (n != static_cast<int>(cols.size())) throw std::invalid_argument("permanent: shape mismatch");
    if (n == 0) return Complex(1.0, 0.0);
    if (n == 1) return A(rows[0], cols[0]);
    if (n == 2)
        return A(rows[0], cols[0]) * A(rows[1], cols[1]) + A(rows[0], cols[1]) * A(rows[1], cols[0]);
    if (n == 3) {
        Complex a = A(rows[0], cols[0]), b = A(rows[0], cols[1]), c = A(rows[0], cols[2]);
        Complex d = A(rows[1], cols[0]), e = A(rows[1], cols[1]), f = A(rows[1], cols[2]);
        Complex g = A(rows[2], cols[0]), h = A(rows[2], cols[1]), i = A(rows[2], cols[2]);
        return a * (e * i + f * h) + b * (d * i + f * g) + c * (d * h + e * g);
    }

    // Ryser with Gray-coded column subsets: perm(A) = (-1)^n sum_S (-1)^|S| prod_i rowsum_i(S)
    std::vector<Complex> rowsum(n, Complex(0.0, 0.0));
    Complex total(0.0, 0.0);
    std::uint64_t gray = 0;
    int popcount = 0;
    const std::uint64_t count = 1ull << n;
    for (std::uint64_t k = 1; k < count; ++k) {
        std::uint64_t next = k ^ (k >> 1);
        std::uint64_t diff = gray ^ next;
        int j =
#if defined(__GNUC__)
            __builtin_ctzll(diff);
#else
            0; while (!((diff >> j) & 1)) ++j;
#endif
        if (next & diff) {
            for (int i = 0; i < n; ++i) rowsum[i] += A(rows[i], cols[j]);
            ++popcount;
        } else {
            for (int i = 0; i < n; ++i) rowsum[i] -= A(rows[i], cols[j]);
            --popcount;
        }
        gray = next;
        Complex prod(1.0, 0.0);
        for (int i = 0; i < n; ++i) prod *= rowsum[i];
        total += (popcount & 1) ? -prod : prod;
    }
    return (n & 1) ? -total : total;
}

FockBasis::FockBasis(int modes, int photons) : m_(modes), n_(photons) {
    if (modes < 1) throw std::invalid_argument("FockBasis: need at least one mode");
    if (photons < 0) throw std::invalid_argument("FockBasis: negative photon number");
    Occupation occ(m_, 0);
    // Descending lexicographic enumeration by recursion on the first mode.
    struct Gen {
        std::vector<Occupation>& out;
        Occupation& occ;
        int m;
        void run(int mode, int left) {
            if (mode == m - 1) {
                occ[mode] = left;
                out.push_back(occ);
                return;
            }
            for (int k = left; k >= 0; --k) {
                occ[mode] = k;
                run(mode + 1, left - k);
            }
        }
    };
    Gen gen{states_, occ, m_};
    gen.run(0, n_);
}

std::size_t FockBasis::index_of(const Occupation& occ) const {
    auto it = std::lower_bound(states_.begin(), states_.end(), occ, lex_greater);
    if (it == states_.end() || *it != occ) throw std::out_of_range("FockBasis::index_of: not a member");
    return static_cast<std::size_t>(it - states_.begin());
}

std::shared_ptr<const FockBasis> FockBasis::get(int modes, int photons) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const FockBasis>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(modes, photons);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto basis = std::make_shared<const FockBasis>(modes, photons);
    cache[key] = basis;
    return basis;
}

BasisPtr basis_of(int modes, int photons) { return FockBasis::get(modes, photons); }

std::string StateVector::to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "fockstate " << basis->modes() << " " << basis->photons() << "\n";
    for (std::size_t i = 0; i < basis->size(); ++i) {
        Complex a = amps(static_cast<Eigen::Index>(i));
        if (a == Complex(0.0, 0.0)) continue;
        for (int v : basis->state(i)) os << v << " ";
        os << a.real() << " " << a.imag() << "\n";
    }
    return os.str();
}

StateVector StateVector::from_text(const std::string& text) {
    std::istringstream is(text);
    std::string tag;
    int m = 0, n = 0;
    is >> tag >> m >> n;
    if (tag != "fockstate") throw std::invalid_argument("StateVector::from_text: bad header");
    StateVector st(basis_of(m, n));
    while (true) {
        Occupation occ(m, 0);
        if (!(is >> occ[0])) break;
        for (int k = 1; k < m; ++k) is >> occ[k];
        double re = 0.0, im = 0.0;
        is >> re >> im;
        st.amps(static_cast<Eigen::Index>(st.basis->index_of(occ))) = Complex(re, im);
    }
    return st;
}

StateVector apply_linear(const Matrix& transfer, const StateVector& state) {
    const FockBasis& basis = *state.basis;
    if (transfer.rows() != basis.modes() || transfer.cols() != basis.modes())
        throw std::invalid_argument("apply_linear: transfer dimension mismatch");
    StateVector out(state.basis);
    const std::size_t dim = basis.size();

    std::vector<std::vector<int>> row_idx(dim);
    std::vector<double> norm(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        row_idx[i] = repeat_indices(basis.state(i));
        norm[i] = std::sqrt(occupation_factorial(basis.state(i)));
    }
    for (std::size_t s = 0; s < dim; ++s) {
        Complex in_amp = state.amps(static_cast<Eigen::Index>(s));
        if (in_amp == Complex(0.0, 0.0)) continue;
        const auto& cols = row_idx[s];
        for (std::size_t t = 0; t < dim; ++t) {
            Complex p = permanent(transfer, row_idx[t], cols);
            out.amps(static_cast<Eigen::Index>(t)) += in_amp * p / (norm[t] * norm[s]);
        }
    }
    return out;
}

Matrix transfer_matrix(const Matrix& transfer, const FockBasis& basis) {
    if (transfer.rows() != basis.modes() || transfer.cols() != basis.modes())
        throw std::invalid_argument("transfer_matrix: dimension mismatch");
    const std::size_t dim = basis.size();
    Matrix out(dim, dim);
    std::vector<std::vector<int>> idx(dim);
    std::vector<double> norm(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        idx[i] = repeat_indices(basis.state(i));
        norm[i] = std::sqrt(occupation_factorial(basis.state(i)));
    }
    for (std::size_t t = 0; t < dim; ++t)
        for (std::size_t s = 0; s < dim; ++s)
            out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) =
                permanent(transfer, idx[t], idx[s]) / (norm[t] * norm[s]);
    return out;
}

namespace {

struct Lift {
    std::int32_t target;
    double weight;  // sqrt(occupation + 1) on the raised mode
};

// For basis(m, k): per state and mode, the index of state+e_mode in
// basis(m, k+1) and the raising weight.
const std::vector<Lift>& lift_table(int modes, int photons) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::vector<Lift>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(modes, photons);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto lo = basis_of(modes, photons);
    auto hi = basis_of(modes, photons + 1);
    std::vector<Lift> table(lo->size() * static_cast<std::size_t>(modes));
    for (std::size_t s = 0; s < lo->size(); ++s) {
        Occupation occ = lo->state(s);
        for (int mode = 0; mode < modes; ++mode) {
            occ[mode] += 1;
            table[s * modes + mode] = {static_cast<std::int32_t>(hi->index_of(occ)),
                                       std::sqrt(double(occ[mode]))};
            occ[mode] -= 1;
        }
    }
    return cache[key] = std::move(table);
}

}  // namespace

Matrix transfer_matrix_fast(const Matrix& transfer, const FockBasis& basis) {
    const int m = basis.modes();
    const int n = basis.photons();
    if (transfer.rows() != m || transfer.cols() != m)
        throw std::invalid_argument("transfer_matrix_fast: dimension mismatch");
    const std::size_t dim = basis.size();
    Matrix out(dim, dim);
    std::vector<Complex> cur, next;
    for (std::size_t s = 0; s < dim; ++s) {
        const std::vector<int> photons_of_s = repeat_indices(basis.state(s));
        cur.assign(1, Complex(1.0, 0.0));
        for (int k = 0; k < n; ++k) {
            const auto& lifts = lift_table(m, k);
            next.assign(basis_of(m, k + 1)->size(), Complex(0.0, 0.0));
            const int src = photons_of_s[static_cast<std::size_t>(k)];
            for (std::size_t idx = 0; idx < cur.size(); ++idx) {
                Complex a = cur[idx];
                if (a == Complex(0.0, 0.0)) continue;
                for (int mode = 0; mode < m; ++mode) {
                    const Lift& l = lifts[idx * static_cast<std::size_t>(m) + mode];
                    next[static_cast<std::size_t>(l.target)] += transfer(mode, src) * l.weight * a;
                }
            }
            cur.swap(next);
        }
        double norm = std::sqrt(occupation_factorial(basis.state(s)));
        for (std::size_t t = 0; t < dim; ++t)
            out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) = cur[t] / norm;
    }
    return out;
}

void apply_nonlinearity_inplace(Vector& amps, const FockBasis& basis, double phi1, double phi2) {
    for (std::size_t i = 0; i < basis.size(); ++i) {
        double phase = 0.0;
        for (int v : basis.state(i))
            if (v >= 1) phase += phi1 + (v - 1) * phi2;
        amps(static_cast<Eigen::Index>(i)) *= std::polar(1.0, phase);
    }
}

StateVector apply_nonlinearity(const StateVector& state, double phi1, double phi2) {
    StateVector out = state;
    apply_nonlinearity_inplace(out.amps, *out.basis, phi1, phi2);
    return out;
}

StateVector lower(const StateVector& state, int mode) {
    const FockBasis& basis = *state.basis;
    if (basis.photons() == 0) throw std::invalid_argument("lower: vacuum sector");
    StateVector out(basis_of(basis.modes(), basis.photons() - 1));
    const FockBasis& lowered = *out.basis;
    for (std::size_t s = 0; s < basis.size(); ++s) {
        Complex a = state.amps(static_cast<Eigen::Index>(s));
        if (a == Complex(0.0, 0.0)) continue;
        const Occupation& occ = basis.state(s);
        if (occ[mode] == 0) continue;
        Occupation low = occ;
        low[mode] -= 1;
        out.amps(static_cast<Eigen::Index>(lowered.index_of(low))) += std::sqrt(double(occ[mode])) * a;
    }
    return out;
}

QubitConfiguration::QubitConfiguration(std::vector<bool> present)
    : present_(std::move(present)), photons_(0), first_present_(-1) {
    if (present_.empty()) throw std::invalid_argument("QubitConfiguration: no slots");
    for (int s = 0; s < slots(); ++s) {
        if (present_[s]) {
            if (first_present_ < 0) first_present_ = s;
            present_slots_.push_back(s);
            ++photons_;
        }
    }
    if (photons_ == 0) throw std::invalid_argument("QubitConfiguration: all slots absent");
}

std::string QubitConfiguration::label() const {
    std::string s;
    for (int i = 0; i < slots(); ++i) {
        if (i) s += ' ';
        s += present_[i] ? 'P' : '.';
    }
    return s;
}

ComputationalBasis computational_basis(const QubitConfiguration& config) {
    ComputationalBasis cb;
    auto basis = basis_of(config.modes(), config.photons());
    const auto& slots = config.present_slots();
    const int q = static_cast<int>(slots.size());
    for (std::uint32_t bits = 0; bits < (1u << q); ++bits) {
        Occupation occ(config.modes(), 0);
        for (int k = 0; k < q; ++k) {
            bool one = (bits >> (q - 1 - k)) & 1u;  // slot order, first present = MSB
            occ[2 * slots[k] + (one ? 1 : 0)] = 1;
        }
        cb.indices.push_back(basis->index_of(occ));
        cb.bitstrings.push_back(bits);
    }
    return cb;
}

namespace {

void qubit_amps(Qubit q, Complex& upper, Complex& lower_amp) {
    const double s = 1.0 / std::sqrt(2.0);
    switch (q) {
        case Qubit::Zero: upper = 1.0; lower_amp = 0.0; break;
        case Qubit::One: upper = 0.0; lower_amp = 1.0; break;
        case Qubit::Plus: upper = s; lower_amp = s; break;
        case Qubit::Minus: upper = s; lower_amp = -s; break;
    }
}

}  // namespace

StateVector encode_dual_rail(const QubitConfiguration& config, const std::vector<Qubit>& logical) {
    if (static_cast<int>(logical.size()) != static_cast<int>(config.present_slots().size()))
        throw std::invalid_argument("encode_dual_rail: one logical state per PRESENT slot");
    StateVector st(basis_of(config.modes(), config.photons()));
    const auto& slots = config.present_slots();
    const int q = static_cast<int>(slots.size());
    // Tensor product over present slots; absent pairs stay vacuum.
    for (std::uint32_t bits = 0; bits < (1u << q); ++bits) {
        Complex amp(1.0, 0.0);
        Occupation occ(config.modes(), 0);
        for (int k = 0; k < q; ++k) {
            Complex up, lo;
            qubit_amps(logical[k], up, lo);
            bool one = (bits >> (q - 1 - k)) & 1u;
            amp *= one ? lo : up;
            occ[2 * slots[k] + (one ? 1 : 0)] = 1;
        }
        if (amp != Complex(0.0, 0.0))
            st.amps(static_cast<Eigen::Index>(st.basis->index_of(occ))) += amp;
    }
    return st;
}

StateVector apply_cz_circuit(const StateVector& state, const QubitConfiguration& config) {
    const double tol = 1e-12;
    ComputationalBasis cb = computational_basis(config);
    double cb_norm = 0.0;
    for (std::size_t i : cb.indices) cb_norm += std::norm(state.amps(static_cast<Eigen::Index>(i)));
    if (state.squared_norm() - cb_norm > tol)
        throw std::invalid_argument("apply_cz_circuit: non-dual-rail input component");

    StateVector out = state;
    const int q = static_cast<int>(config.present_slots().size());
    for (std::size_t k = 0; k < cb.indices.size(); ++k) {
        std::uint32_t bits = cb.bitstrings[k];
        bool control = (bits >> (q - 1)) & 1u;
        if (!control) continue;
        int ones = 0;
        for (int j = 1; j < q; ++j) ones += (bits >> (q - 1 - j)) & 1u;
        if (ones & 1) out.amps(static_cast<Eigen::Index>(cb.indices[k])) *= -1.0;
    }
    return out;
}

std::vector<QubitConfiguration> configs_for_branching(int b) {
    if (b < 1) throw std::invalid_argument("configs_for_branching: b >= 1");
    std::vector<QubitConfiguration> out;
    // Enumerate child subsets from full occupancy down to the lone parent.
    for (int mask = (1 << b) - 1; mask >= 0; --mask) {
        std::vector<bool> present(static_cast<std::size_t>(b) + 1, false);
        present[0] = true;
        for (int c = 0; c < b; ++c)
            if ((mask >> c) & 1) present[static_cast<std::size_t>(c) + 1] = true;
        out.emplace_back(std::move(present));
    }
    return out;
}

namespace {

void enumerate_inputs(const QubitConfiguration& config, bool x_basis, bool fix_first,
                      std::vector<std::vector<Qubit>>& out) {
    const int q = static_cast<int>(config.present_slots().size());
    const int free_slots = fix_first ? q - 1 : q;
    Qubit lo = x_basis ? Qubit::Plus : Qubit::Zero;
    Qubit hi = x_basis ? Qubit::Minus : Qubit::One;
    for (std::uint32_t bits = 0; bits < (1u << free_slots); ++bits) {
        std::vector<Qubit> logical;
        if (fix_first) logical.push_back(Qubit::Plus);
        for (int k = 0; k < free_slots; ++k)
            logical.push_back(((bits >> (free_slots - 1 - k)) & 1u) ? hi : lo);
        out.push_back(std::move(logical));
    }
}

}  // namespace

std::vector<TrainingPair> build_training_set(const std::vector<QubitConfiguration>& configs,
                                             BasisChoice choice) {
    if (configs.empty()) throw std::invalid_argument("build_training_set: empty config list");
    std::vector<TrainingPair> pairs;
    const bool fix_first = (choice == BasisChoice::Restricted);
    for (const auto& config : configs) {
        std::vector<std::vector<Qubit>> inputs;
        enumerate_inputs(config, true, fix_first, inputs);
        enumerate_inputs(config, false, fix_first, inputs);
        for (const auto& logical : inputs) {
            StateVector in = encode_dual_rail(config, logical);
            bool dup = false;
            for (const auto& existing : pairs) {
                if (existing.config.modes() != config.modes()) continue;
                if (existing.input.basis != in.basis) continue;
                if ((existing.input.amps - in.amps).lpNorm<Eigen::Infinity>() == 0.0) {
                    dup = true;
                    break;
                }
            }
            if (dup) continue;
            StateVector targ = apply_cz_circuit(in, config);
            pairs.push_back(TrainingPair{config, std::move(in), std::move(targ), logical});
        }
    }
    return pairs;
}

}  // namespace treegen::fock

#include "qfdt/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qfdt::hilbert {

SpinBasis::SpinBasis(int n) : n_spins(n) {
    if (n < 1 || n > 30) {
        throw std::invalid_argument("SpinBasis: n_spins must be in [1, 30]");
    }
    dimension = Index(1) << n;
}

int SpinBasis::bit(Index index, int site) const {
    if (site < 1 || site > n_spins) {
        throw std::invalid_argument("SpinBasis::bit: site out of range");
    }
    return static_cast<int>((index >> (n_spins - site)) & 1);
}

PauliKind pauli_kind_from_string(const std::string& s) {
    if (s == "x") return PauliKind::x;
    if (s == "y") return PauliKind::y;
    if (s == "z") return PauliKind::z;
    if (s == "plus" || s == "+") return PauliKind::plus;
    if (s == "minus" || s == "-") return PauliKind::minus;
    throw std::invalid_argument("unknown Pauli kind: " + s);
}

SparseHermitian::SparseHermitian(Index dim, std::vector<Entry> upper_entries)
    : dim_(dim), entries_(std::move(upper_entries)) {
    if (dim_ < 1) throw std::invalid_argument("SparseHermitian: dim must be >= 1");
    for (auto& e : entries_) {
        if (e.row > e.col) std::swap(e.row, e.col);
        if (e.row < 0 || e.col >= dim_) {
            throw std::invalid_argument("SparseHermitian: entry out of range");
        }
    }
    std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
        return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    // merge duplicates, drop exact zeros
    std::vector<Entry> packed;
    packed.reserve(entries_.size());
    for (const auto& e : entries_) {
        if (!packed.empty() && packed.back().row == e.row && packed.back().col == e.col) {
            packed.back().value += e.value;
        } else {
            packed.push_back(e);
        }
    }
    std::erase_if(packed, [](const Entry& e) { return e.value == 0.0; });
    entries_ = std::move(packed);
}

double SparseHermitian::coeff(Index r, Index c) const {
    if (r > c) std::swap(r, c);
    auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair{r, c},
                               [](const Entry& e, const std::pair<Index, Index>& k) {
                                   return std::tie(e.row, e.col) < std::tie(k.first, k.second);
                               });
    if (it != entries_.end() && it->row == r && it->col == c) return it->value;
    return 0.0;
}

Eigen::MatrixXd SparseHermitian::to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim_, dim_);
    for (const auto& e : entries_) {
        m(e.row, e.col) = e.value;
        m(e.col, e.row) = e.value;
    }
    return m;
}

Eigen::VectorXd SparseHermitian::apply(const Eigen::VectorXd& x) const {
    if (x.size() != dim_) throw std::invalid_argument("SparseHermitian::apply: dimension mismatch");
    Eigen::VectorXd y = Eigen::VectorXd::Zero(dim_);
    for (const auto& e : entries_) {
        y[e.row] += e.value * x[e.col];
        if (e.row != e.col) y[e.col] += e.value * x[e.row];
    }
    return y;
}

double SparseHermitian::bilinear(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    if (x.size() != dim_ || y.size() != dim_) {
        throw std::invalid_argument("SparseHermitian::bilinear: dimension mismatch");
    }
    double acc = 0.0;
    for (const auto& e : entries_) {
        if (e.row == e.col) {
            acc += e.value * x[e.row] * y[e.row];
        } else {
            acc += e.value * (x[e.row] * y[e.col] + x[e.col] * y[e.row]);
        }
    }
    return acc;
}

std::pair<double, double> SparseHermitian::complex_quadratic(const Eigen::VectorXd& re,
                                                             const Eigen::VectorXd& im) const {
    if (re.size() != dim_ || im.size() != dim_) {
        throw std::invalid_argument("SparseHermitian::complex_quadratic: dimension mismatch");
    }
    // <y|M|y> = re^T M re + im^T M im + i (re^T M im - im^T M re)
    double real_acc = 0.0;
    double imag_acc = 0.0;
    for (const auto& e : entries_) {
        if (e.row == e.col) {
            real_acc += e.value * (re[e.row] * re[e.row] + im[e.row] * im[e.row]);
        } else {
            real_acc += e.value * (re[e.row] * re[e.col] + re[e.col] * re[e.row] +
                                   im[e.row] * im[e.col] + im[e.col] * im[e.row]);
            imag_acc += e.value * (re[e.row] * im[e.col] + re[e.col] * im[e.row] -
                                   im[e.row] * re[e.col] - im[e.col] * re[e.row]);
        }
    }
    return {real_acc, imag_acc};
}

double SparseHermitian::max_abs() const {
    double m = 0.0;
    for (const auto& e : entries_) m = std::max(m, std::abs(e.value));
    return m;
}

SparseHermitian SparseHermitian::scaled(double factor) const {
    std::vector<Entry> out(entries_.begin(), entries_.end());
    for (auto& e : out) e.value *= factor;
    return SparseHermitian(dim_, std::move(out));
}

SparseHermitian SparseHermitian::sum(const SparseHermitian& a, const SparseHermitian& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("SparseHermitian::sum: dimension mismatch");
    std::vector<Entry> out(a.entries_.begin(), a.entries_.end());
    out.insert(out.end(), b.entries_.begin(), b.entries_.end());
    return SparseHermitian(a.dim(), std::move(out));
}

void SparseOperator::add(Index r, Index c, std::complex<double> v) {
    if (r < 0 || r >= dim_ || c < 0 || c >= dim_) {
        throw std::invalid_argument("SparseOperator::add: index out of range");
    }
    auto [it, inserted] = map_.try_emplace({r, c}, v);
    if (!inserted) it->second += v;
}

std::complex<double> SparseOperator::coeff(Index r, Index c) const {
    auto it = map_.find({r, c});
    return it == map_.end() ? std::complex<double>(0.0) : it->second;
}

double SparseOperator::max_abs() const {
    double m = 0.0;
    for (const auto& [k, v] : map_) m = std::max(m, std::abs(v));
    return m;
}

bool SparseOperator::is_hermitian(double tol) const {
    const double scale = std::max(max_abs(), 1.0);
    for (const auto& [k, v] : map_) {
        const auto conj_partner = coeff(k.second, k.first);
        if (std::abs(v - std::conj(conj_partner)) > tol * scale) return false;
    }
    return true;
}

bool SparseOperator::is_real(double tol) const {
    const double scale = std::max(max_abs(), 1.0);
    for (const auto& [k, v] : map_) {
        if (std::abs(v.imag()) > tol * scale) return false;
    }
    return true;
}

Eigen::MatrixXcd SparseOperator::to_dense() const {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim_, dim_);
    for (const auto& [k, v] : map_) m(k.first, k.second) += v;
    return m;
}

SparseHermitian SparseOperator::to_hermitian(double tol) const {
    if (!is_real(tol)) {
        throw std::invalid_argument("SparseOperator::to_hermitian: assembly has imaginary entries");
    }
    if (!is_hermitian(tol)) {
        throw std::invalid_argument("SparseOperator::to_hermitian: assembly is not Hermitian");
    }
    const double scale = std::max(max_abs(), 1.0);
    std::vector<Entry> upper;
    upper.reserve(map_.size());
    for (const auto& [k, v] : map_) {
        if (k.first > k.second) continue;
        const double val = v.real();
        if (std::abs(val) <= tol * scale * 1e-3) continue;  // cancellation dust
        upper.push_back({k.first, k.second, val});
    }
    return SparseHermitian(dim_, std::move(upper));
}

StateVector::StateVector(Eigen::VectorXd amps) : amplitudes(std::move(amps)) {
    const double n2 = amplitudes.squaredNorm();
    if (std::abs(n2 - 1.0) > 1e-12) {
        throw std::invalid_argument("StateVector: norm deviates from 1 by more than 1e-12");
    }
}

StateVector StateVector::basis_state(Index dim, Index index) {
    if (index < 0 || index >= dim) {
        throw std::invalid_argument("StateVector::basis_state: index out of range");
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    v[index] = 1.0;
    return StateVector(std::move(v));
}

namespace {

// Action of a single-site Pauli factor on a bit value:
// returns false when the state is annihilated, otherwise sets the new bit
// and multiplies the coefficient.
bool apply_factor(PauliKind kind, int bit_in, int& bit_out, std::complex<double>& coeff) {
    switch (kind) {
        case PauliKind::z:
            bit_out = bit_in;
            coeff *= (bit_in == 0) ? 1.0 : -1.0;
            return true;
        case PauliKind::x:
            bit_out = 1 - bit_in;
            return true;
        case PauliKind::y:
            // sigma_y |up> = i |down>,  sigma_y |down> = -i |up>
            bit_out = 1 - bit_in;
            coeff *= (bit_in == 0) ? std::complex<double>(0.0, 1.0)
                                   : std::complex<double>(0.0, -1.0);
            return true;
        case PauliKind::plus:
            if (bit_in == 0) return false;  // sigma_+ |up> = 0
            bit_out = 0;
            return true;
        case PauliKind::minus:
            if (bit_in == 1) return false;  // sigma_- |down> = 0
            bit_out = 1;
            return true;
    }
    return false;
}

void check_site(int site, const SpinBasis& basis) {
    if (site < 1 || site > basis.n_spins) {
        throw std::invalid_argument("pauli operator: site out of range");
    }
}

}  // namespace

SparseOperator pauli_operator(PauliKind kind, int site, const SpinBasis& basis) {
    check_site(site, basis);
    SparseOperator op(basis.dimension);
    const int shift = basis.n_spins - site;
    for (Index col = 0; col < basis.dimension; ++col) {
        const int b = static_cast<int>((col >> shift) & 1);
        int b_out = 0;
        std::complex<double> coeff = 1.0;
        if (!apply_factor(kind, b, b_out, coeff)) continue;
        const Index row = (col & ~(Index(1) << shift)) | (Index(b_out) << shift);
        op.add(row, col, coeff);
    }
    return op;
}

SparseHermitian operator_product_sum(const std::vector<PauliTerm>& terms,
                                     const SpinBasis& basis) {
    SparseOperator acc(basis.dimension);
    for (const auto& term : terms) {
        for (const auto& f : term.factors) check_site(f.site, basis);
        for (Index col = 0; col < basis.dimension; ++col) {
            Index state = col;
            std::complex<double> coeff = term.coefficient;
            bool alive = true;
            // rightmost factor acts first
            for (auto it = term.factors.rbegin(); it != term.factors.rend(); ++it) {
                const int shift = basis.n_spins - it->site;
                const int b = static_cast<int>((state >> shift) & 1);
                int b_out = 0;
                if (!apply_factor(it->kind, b, b_out, coeff)) {
                    alive = false;
                    break;
                }
                state = (state & ~(Index(1) << shift)) | (Index(b_out) << shift);
            }
            if (alive && coeff != 0.0) acc.add(state, col, coeff);
        }
    }
    return acc.to_hermitian();
}

double expectation(const StateVector& state, const SparseHermitian& op) {
    if (state.dim() != op.dim()) {
        throw std::invalid_argument("expectation: dimension mismatch");
    }
    return op.quadratic(state.amplitudes);
}

double expectation(const Eigen::VectorXcd& state, const SparseHermitian& op) {
    if (state.size() != op.dim()) {
        throw std::invalid_argument("expectation: dimension mismatch");
    }
    const Eigen::VectorXd re = state.real();
    const Eigen::VectorXd im = state.imag();
    auto [val, imag_residue] = op.complex_quadratic(re, im);
    const double scale = std::max(1.0, std::abs(val));
    if (std::abs(imag_residue) > 1e-10 * scale) {
        throw std::runtime_error("expectation: imaginary residue above 1e-10");
    }
    return val;
}

}  // namespace qfdt::hilbert

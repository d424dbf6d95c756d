// heom.hpp - hierarchical equations of motion for the Drude-Lorentz bath.
//
// For a multi-index n over the exponential modes of BathExpansion:
//
//   d rho_n/dt = -i[H_S + H_SF(t), rho_n] - sum_k n_k nu_k rho_n
//                - i sum_k [Q, rho_{n+e_k}]
//                - i sum_k n_k (c_k Q rho_{n-e_k} - c_k^* rho_{n-e_k} Q)
//                - Delta_K [Q, [Q, rho_n]]
//
// rho_0 is the physical density matrix. Indices above the hierarchy depth are
// dropped. With scaled ADOs each rho_n is divided by
// prod_k sqrt(n_k! |c_k|^n_k), which keeps deep tiers O(1).
//
// Every ADO is stored row-major in one contiguous buffer, in layout order.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vibronic/bath.hpp"
#include "vibronic/model.hpp"
#include "vibronic/types.hpp"

namespace vibronic {

struct HierarchyIndex {
    std::vector<int> counts;
    int tier = 0;

    bool operator==(const HierarchyIndex&) const = default;
};

/// All multi-indices with tier <= depth plus their raise/lower neighbours.
/// raise(i, k) / lower(i, k) return -1 when the neighbour is outside.
class HierarchyLayout {
public:
    HierarchyLayout(int n_modes, int depth, std::vector<HierarchyIndex> indices);

    int n_modes() const { return n_modes_; }
    int depth() const { return depth_; }
    std::size_t size() const { return indices_.size(); }
    const HierarchyIndex& index(std::size_t i) const { return indices_[i]; }
    const std::vector<HierarchyIndex>& indices() const { return indices_; }

    int raise(std::size_t i, int k) const { return raise_[i * n_modes_ + k]; }
    int lower(std::size_t i, int k) const { return lower_[i * n_modes_ + k]; }

    /// Position of a multi-index, or -1.
    int find(const std::vector<int>& counts) const;

private:
    int n_modes_;
    int depth_;
    std::vector<HierarchyIndex> indices_;
    std::vector<int> raise_;
    std::vector<int> lower_;
};

inline constexpr std::size_t kDefaultAdoCap = 100000;

/// C(n_modes + depth, depth) indices ordered by tier. Throws
/// std::invalid_argument when the count exceeds `cap`.
std::shared_ptr<const HierarchyLayout> enumerate_hierarchy(int n_modes, int depth,
                                                           std::size_t cap = kDefaultAdoCap);

/// Number of multi-indices, saturating at SIZE_MAX.
std::size_t hierarchy_size(int n_modes, int depth);

struct PropagatorConfig {
    double dt = 0.05;  // fs
    int depth = 4;
    int record_stride = 20;
    bool use_scaled_ados = true;

    void validate() const;
    bool operator==(const PropagatorConfig&) const = default;
};

class AdoHierarchy {
public:
    AdoHierarchy(std::shared_ptr<const HierarchyLayout> layout, int dim, double time_fs, bool scaled);

    /// Physical matrix set to `rho`, every auxiliary operator zero.
    static AdoHierarchy from_density(std::shared_ptr<const HierarchyLayout> layout, const DensityMatrix& rho,
                                     double time_fs, bool scaled);

    const HierarchyLayout& layout() const { return *layout_; }
    const std::shared_ptr<const HierarchyLayout>& layout_ptr() const { return layout_; }
    int dim() const { return dim_; }
    std::size_t n_ados() const { return layout_->size(); }
    std::size_t block() const { return static_cast<std::size_t>(dim_) * dim_; }
    bool scaled() const { return scaled_; }

    double time() const { return time_; }
    void set_time(double t) { time_ = t; }

    std::span<cplx> data() { return data_; }
    std::span<const cplx> data() const { return data_; }

    /// Copy of ADO `i` as a dense matrix.
    CMatrix ado(std::size_t i) const;
    void set_ado(std::size_t i, const CMatrix& m);
    DensityMatrix physical() const;

    bool all_finite() const;
    double max_ado_norm() const;

private:
    std::shared_ptr<const HierarchyLayout> layout_;
    int dim_;
    double time_;
    bool scaled_;
    std::vector<cplx> data_;
};

/// A real matrix stored by its non-zero diagonals. Every operator the
/// generator touches is real and banded in the diabatic basis.
class BandedOperator {
public:
    BandedOperator() = default;
    /// Throws std::invalid_argument if `m` has an imaginary part above `tol`.
    static BandedOperator from_dense(const CMatrix& m, double tol = 0.0);

    int dim() const { return dim_; }
    const std::vector<int>& offsets() const { return offsets_; }
    /// coeffs[j][r] = A(r, r + offsets[j]); zero where out of range.
    const std::vector<std::vector<double>>& coeffs() const { return coeffs_; }

    /// out += scale * A * x  (row-major dim x dim blocks)
    void apply_left(const cplx* x, cplx* out, double scale = 1.0) const;
    /// out += scale * x * A
    void apply_right(const cplx* x, cplx* out, double scale = 1.0) const;

    CMatrix to_dense() const;

private:
    int dim_ = 0;
    std::vector<int> offsets_;
    std::vector<std::vector<double>> coeffs_;
};

/// Time-dependent HEOM right-hand side over a fixed layout.
///
/// With real decay rates the generator maps Hermitian ADOs to Hermitian
/// derivatives. `apply` relies on that: it evaluates the left-multiplied half
/// G of every term and returns G + G^dagger, so its input ADOs must be
/// Hermitian (true for every state built from a density matrix, a seeded
/// state, or a propagation of either). `apply_general` evaluates every term
/// directly and accepts arbitrary input.
class HeomGenerator {
public:
    HeomGenerator(const OperatorSet& ops, const BathExpansion& bath,
                  std::shared_ptr<const HierarchyLayout> layout, bool scaled);

    int dim() const { return dim_; }
    bool scaled() const { return scaled_; }
    std::size_t state_size() const { return layout_->size() * static_cast<std::size_t>(dim_) * dim_; }
    const HierarchyLayout& layout() const { return *layout_; }
    const std::shared_ptr<const HierarchyLayout>& layout_ptr() const { return layout_; }

    /// out = d/dt of `in` at time t_fs (Hermitian ADOs).
    void apply(double t_fs, const DriveField& drive, const cplx* in, cplx* out) const;
    /// Same map without the Hermiticity shortcut.
    void apply_general(double t_fs, const DriveField& drive, const cplx* in, cplx* out) const;

private:
    struct Link {
        int target;
        double scale;  // real weight; the complex bath coefficient is applied separately
        int mode;
    };

    std::shared_ptr<const HierarchyLayout> layout_;
    int dim_;
    bool scaled_;
    double terminator_;            // rad/fs
    BandedOperator hamiltonian_;   // H_S, rad/fs
    BandedOperator q_;
    BandedOperator q_squared_;
    BandedOperator drive_;         // (|e><g| + h.c.) (x) 1
    std::vector<cplx> coeff_;      // c_k, fs^-2
    std::vector<double> decay_;    // sum_k n_k nu_k, rad/fs
    std::vector<std::vector<Link>> up_;
    std::vector<std::vector<Link>> down_;
};

/// Derivative of the whole hierarchy at time t_fs.
AdoHierarchy heom_rhs(const AdoHierarchy& state, double t_fs, const HeomGenerator& gen, const DriveField& drive);

struct Trajectory {
    std::vector<double> times_fs;
    std::vector<DensityMatrix> states;

    void append(const Trajectory& next);  // skips a duplicated leading sample
};

/// Fixed-step RK4 from state.time() to t_end_fs. Samples the physical matrix at
/// the start and every record_stride steps (plus the final step). The state is
/// advanced in place so calls can be chained. Throws NumericalInstability if
/// any ADO becomes non-finite or its Frobenius norm exceeds 1e6.
Trajectory propagate(AdoHierarchy& state, double t_end_fs, const PropagatorConfig& config,
                     const HeomGenerator& gen, const DriveField& drive);

inline constexpr double kInstabilityNorm = 1e6;

// Binary checkpoint, little-endian:
//   char[8]  "VIBHEOM1"
//   uint32   n_modes, depth, dim, scaled (0/1)
//   uint64   n_ados
//   float64  time_fs
//   complex<float64>[n_ados * dim * dim]  (re, im), ADOs in layout order, row-major
void write_checkpoint(const AdoHierarchy& state, std::ostream& os);
void write_checkpoint(const AdoHierarchy& state, const std::string& path);
AdoHierarchy read_checkpoint(std::istream& is, std::size_t cap = kDefaultAdoCap);
AdoHierarchy read_checkpoint(const std::string& path, std::size_t cap = kDefaultAdoCap);

}  // namespace vibronic

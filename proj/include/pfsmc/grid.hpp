#pragma once

// Uniform vertex-centred grids on axis-aligned boxes, scalar fields with
// trapezoid quadrature, and the homogeneous Neumann Laplacian.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace pfsmc {

/// Box [0,L_0] x ... x [0,L_{d-1}] with n_a nodes per axis (n_a >= 3).
/// Node storage is row-major: axis 0 varies slowest.
class Mesh {
 public:
  Mesh(std::span<const double> lengths, std::span<const std::size_t> counts);

  static Mesh interval(double length, std::size_t nodes);

  int dim() const noexcept { return dim_; }
  double length(int axis) const noexcept { return lengths_[axis]; }
  std::size_t count(int axis) const noexcept { return counts_[axis]; }
  double spacing(int axis) const noexcept { return spacing_[axis]; }
  std::size_t stride(int axis) const noexcept { return strides_[axis]; }

  std::size_t size() const noexcept { return size_; }
  double measure() const noexcept;

  std::array<std::size_t, 3> index(std::size_t node) const noexcept;
  std::array<double, 3> coords(std::size_t node) const noexcept;

  /// 1D trapezoid weight of the i-th node along `axis`.
  double axis_weight(int axis, std::size_t i) const noexcept;
  /// Product of the per-axis trapezoid weights.
  double weight(std::size_t node) const noexcept;

  /// Same shape and node counts; lengths equal to 1e-12 relative.
  bool operator==(const Mesh& other) const noexcept;

 private:
  int dim_ = 1;
  std::array<double, 3> lengths_{1.0, 1.0, 1.0};
  std::array<double, 3> spacing_{1.0, 1.0, 1.0};
  std::array<std::size_t, 3> counts_{1, 1, 1};
  std::array<std::size_t, 3> strides_{1, 1, 1};
  std::size_t size_ = 1;
};

/// Nodal values on a mesh. Values are finite when constructed from data.
class Field {
 public:
  explicit Field(const Mesh& mesh, double fill = 0.0);
  Field(const Mesh& mesh, std::vector<double> values);

  template <class Fn>
  static Field from_function(const Mesh& mesh, Fn&& fn) {
    std::vector<double> v(mesh.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto x = mesh.coords(i);
      v[i] = fn(x[0], x[1], x[2]);
    }
    return Field(mesh, std::move(v));
  }

  const Mesh& mesh() const noexcept { return mesh_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  bool all_finite() const noexcept;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s) noexcept;
  /// this += a * x
  Field& axpy(double a, const Field& x);

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(Field a, double s) { return a *= s; }

 private:
  Mesh mesh_;
  std::vector<double> values_;
};

void require_same_mesh(const Field& a, const Field& b);

double integral(const Field& v);
/// Weighted L2(Omega) inner product.
double inner(const Field& u, const Field& v);
double l2_norm(const Field& v);
double linf_norm(const Field& v);
/// Discrete Dirichlet energy: sum over grid edges of squared forward differences.
double gradient_energy(const Field& v);

/// Second-order Laplacian with reflected ghost nodes (zero normal flux).
Field laplacian_neumann(const Field& v);

struct Norms {
  double l2 = 0.0;
  double linf = 0.0;
  double h1 = 0.0;
  /// ||v||_W^2 = ||v||^2 + |Omega|^{4/3} ||Lap v||^2
  double w = 0.0;
};
Norms norms(const Field& v);
double w_norm(const Field& v);

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Solves (I - coeff * Lap) u = rhs by conjugate gradients in the weighted
/// inner product. The start vector is rhs itself, so every residual has zero
/// weighted mean and the solve conserves the discrete integral.
Field solve_implicit_diffusion(const Field& rhs, double coeff, double tol = 1e-10,
                               SolveStats* stats = nullptr);

/// Empirical lower estimate of sup ||v||_inf / ||v||_W over band-limited
/// cosine fields: random sampling followed by coordinate hill-climbing.
double estimate_embedding_constant(const Mesh& mesh, std::size_t samples, std::uint64_t seed = 1);

// Snapshot formats.
// CSV: header "x[,y[,z]],value", one row per node in storage order.
// Binary: u32 dim, dim x u64 counts, dim x f64 spacings, then size() f64
// values in row-major order; everything little-endian.
void write_field_csv(std::ostream& os, const Field& v);
Field read_field_csv(std::istream& is, const Mesh& mesh);
void write_field_binary(std::ostream& os, const Field& v);
Field read_field_binary(std::istream& is);

}  // namespace pfsmc

#include "pfsmc/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pfsmc/errors.hpp"

namespace pfsmc {

Mesh::Mesh(std::span<const double> lengths, std::span<const std::size_t> counts) {
  if (lengths.size() != counts.size() || lengths.empty() || lengths.size() > 3)
    throw std::invalid_argument("mesh: need 1 to 3 axes with one length and one count each");
  dim_ = static_cast<int>(lengths.size());
  for (int a = 0; a < dim_; ++a) {
    if (!(lengths[a] > 0.0) || !std::isfinite(lengths[a]))
      throw std::invalid_argument("mesh: axis lengths must be positive");
    if (counts[a] < 3) throw std::invalid_argument("mesh: at least 3 nodes per axis");
    lengths_[a] = lengths[a];
    counts_[a] = counts[a];
    spacing_[a] = lengths[a] / static_cast<double>(counts[a] - 1);
  }
  size_ = 1;
  for (int a = dim_ - 1; a >= 0; --a) {
    strides_[a] = size_;
    size_ *= counts_[a];
  }
}

Mesh Mesh::interval(double length, std::size_t nodes) {
  const double l[] = {length};
  const std::size_t n[] = {nodes};
  return Mesh(l, n);
}

bool Mesh::operator==(const Mesh& other) const noexcept {
  if (dim_ != other.dim_) return false;
  for (int a = 0; a < dim_; ++a) {
    if (counts_[a] != other.counts_[a]) return false;
    if (std::abs(lengths_[a] - other.lengths_[a]) > 1e-12 * lengths_[a]) return false;
  }
  return true;
}

double Mesh::measure() const noexcept {
  double m = 1.0;
  for (int a = 0; a < dim_; ++a) m *= lengths_[a];
  return m;
}

std::array<std::size_t, 3> Mesh::index(std::size_t node) const noexcept {
  std::array<std::size_t, 3> idx{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    idx[a] = node / strides_[a];
    node -= idx[a] * strides_[a];
  }
  return idx;
}

std::array<double, 3> Mesh::coords(std::size_t node) const noexcept {
  const auto idx = index(node);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) x[a] = static_cast<double>(idx[a]) * spacing_[a];
  return x;
}

double Mesh::axis_weight(int axis, std::size_t i) const noexcept {
  const bool edge = i == 0 || i + 1 == counts_[axis];
  return edge ? 0.5 * spacing_[axis] : spacing_[axis];
}

double Mesh::weight(std::size_t node) const noexcept {
  const auto idx = index(node);
  double w = 1.0;
  for (int a = 0; a < dim_; ++a) w *= axis_weight(a, idx[a]);
  return w;
}

Field::Field(const Mesh& mesh, double fill) : mesh_(mesh), values_(mesh.size(), fill) {}

Field::Field(const Mesh& mesh, std::vector<double> values) : mesh_(mesh), values_(std::move(values)) {
  if (values_.size() != mesh_.size())
    throw std::invalid_argument("field: value count " + std::to_string(values_.size()) +
                                " does not match mesh size " + std::to_string(mesh_.size()));
  if (!all_finite()) throw std::invalid_argument("field: non-finite value");
}

bool Field::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

void require_same_mesh(const Field& a, const Field& b) {
  if (!(a.mesh() == b.mesh())) throw std::invalid_argument("fields live on different meshes");
}

Field& Field::operator+=(const Field& other) {
  require_same_mesh(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_mesh(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(double s) noexcept {
  for (double& v : values_) v *= s;
  return *this;
}

Field& Field::axpy(double a, const Field& x) {
  require_same_mesh(*this, x);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += a * x.values_[i];
  return *this;
}

double integral(const Field& v) {
  const Mesh& m = v.mesh();
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += m.weight(i) * v[i];
  return s;
}

double inner(const Field& u, const Field& v) {
  require_same_mesh(u, v);
  const Mesh& m = u.mesh();
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += m.weight(i) * u[i] * v[i];
  return s;
}

double l2_norm(const Field& v) { return std::sqrt(inner(v, v)); }

double linf_norm(const Field& v) {
  double m = 0.0;
  for (double x : v.values()) m = std::max(m, std::abs(x));
  return m;
}

double gradient_energy(const Field& v) {
  const Mesh& m = v.mesh();
  double s = 0.0;
  for (std::size_t node = 0; node < v.size(); ++node) {
    const auto idx = m.index(node);
    for (int a = 0; a < m.dim(); ++a) {
      if (idx[a] + 1 == m.count(a)) continue;
      const double h = m.spacing(a);
      const double d = (v[node + m.stride(a)] - v[node]) / h;
      // edge length h times the transverse trapezoid weights
      double w = h;
      for (int b = 0; b < m.dim(); ++b)
        if (b != a) w *= m.axis_weight(b, idx[b]);
      s += w * d * d;
    }
  }
  return s;
}

Field laplacian_neumann(const Field& v) {
  const Mesh& m = v.mesh();
  Field out(m);
  for (std::size_t node = 0; node < v.size(); ++node) {
    const auto idx = m.index(node);
    double acc = 0.0;
    for (int a = 0; a < m.dim(); ++a) {
      const std::size_t s = m.stride(a);
      const std::size_t n = m.count(a);
      const double left = idx[a] == 0 ? v[node + s] : v[node - s];
      const double right = idx[a] + 1 == n ? v[node - s] : v[node + s];
      const double h = m.spacing(a);
      acc += (left - 2.0 * v[node] + right) / (h * h);
    }
    out[node] = acc;
  }
  return out;
}

double w_norm(const Field& v) {
  const double l2 = l2_norm(v);
  const double lap = l2_norm(laplacian_neumann(v));
  return std::sqrt(l2 * l2 + std::pow(v.mesh().measure(), 4.0 / 3.0) * lap * lap);
}

Norms norms(const Field& v) {
  Norms n;
  n.l2 = l2_norm(v);
  n.linf = linf_norm(v);
  n.h1 = std::sqrt(n.l2 * n.l2 + gradient_energy(v));
  n.w = w_norm(v);
  return n;
}

Field solve_implicit_diffusion(const Field& rhs, double coeff, double tol, SolveStats* stats) {
  if (coeff < 0.0) throw std::invalid_argument("implicit diffusion: negative coefficient");
  const auto apply = [coeff](const Field& u) {
    Field out = laplacian_neumann(u);
    out *= -coeff;
    out += u;
    return out;
  };

  Field x = rhs;
  const double bnorm = l2_norm(rhs);
  if (bnorm == 0.0 || coeff == 0.0) {
    if (stats) *stats = {0, 0.0};
    return x;
  }
  Field r = rhs - apply(x);
  Field p = r;
  double rr = inner(r, r);
  const int max_iter = static_cast<int>(10 * rhs.size()) + 100;
  for (int it = 0; it < max_iter; ++it) {
    const double rel = std::sqrt(rr) / bnorm;
    if (rel <= tol) {
      if (stats) *stats = {it, rel};
      return x;
    }
    const Field ap = apply(p);
    const double alpha = rr / inner(p, ap);
    x.axpy(alpha, p);
    r.axpy(-alpha, ap);
    const double rr_new = inner(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
  }
  throw ConvergenceError("conjugate gradients did not reach relative residual " + std::to_string(tol));
}

namespace {

// Cosine products cos(k_a pi x_a / L_a) with total degree below `degree`;
// each one satisfies the Neumann condition.
std::vector<std::array<int, 3>> cosine_modes(const Mesh& mesh, int degree) {
  std::vector<std::array<int, 3>> modes;
  const int k1 = mesh.dim() > 1 ? degree : 1;
  const int k2 = mesh.dim() > 2 ? degree : 1;
  for (int a = 0; a < degree; ++a)
    for (int b = 0; b < k1; ++b)
      for (int c = 0; c < k2; ++c)
        if (a + b + c < degree) modes.push_back({a, b, c});
  return modes;
}

}  // namespace

double estimate_embedding_constant(const Mesh& mesh, std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("embedding estimate: samples must be >= 1");

  int degree = 8;
  for (int a = 0; a < mesh.dim(); ++a)
    degree = std::min<int>(degree, static_cast<int>(mesh.count(a) - 1) / 2 + 1);
  const auto modes = cosine_modes(mesh, degree);
  const std::size_t nm = modes.size();

  std::vector<Field> basis;
  basis.reserve(nm);
  for (const auto& k : modes) {
    basis.push_back(Field::from_function(mesh, [&](double x, double y, double z) {
      const double xs[3] = {x, y, z};
      double v = 1.0;
      for (int a = 0; a < mesh.dim(); ++a) v *= std::cos(k[a] * M_PI * xs[a] / mesh.length(a));
      return v;
    }));
  }

  // ||v||_W^2 = a^T G a with G the W-Gram matrix of the basis.
  const double lap_weight = std::pow(mesh.measure(), 4.0 / 3.0);
  std::vector<Field> lap;
  lap.reserve(nm);
  for (const auto& b : basis) lap.push_back(laplacian_neumann(b));
  std::vector<double> gram(nm * nm);
  for (std::size_t i = 0; i < nm; ++i)
    for (std::size_t j = i; j < nm; ++j) {
      const double g = inner(basis[i], basis[j]) + lap_weight * inner(lap[i], lap[j]);
      gram[i * nm + j] = gram[j * nm + i] = g;
    }

  std::vector<double> v(mesh.size());
  const auto ratio = [&](const std::vector<double>& a) {
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t k = 0; k < nm; ++k)
      if (a[k] != 0.0)
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += a[k] * basis[k][i];
    double sup = 0.0;
    for (double x : v) sup = std::max(sup, std::abs(x));
    double wn = 0.0;
    for (std::size_t i = 0; i < nm; ++i)
      for (std::size_t j = 0; j < nm; ++j) wn += a[i] * gram[i * nm + j] * a[j];
    return wn > 0.0 ? sup / std::sqrt(wn) : 0.0;
  };

  std::vector<double> best(nm, 0.0);
  best[0] = 1.0;  // constant field
  double best_ratio = ratio(best);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> trial(nm);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t k = 0; k < nm; ++k) {
      const int deg = modes[k][0] + modes[k][1] + modes[k][2];
      trial[k] = normal(rng) / (1.0 + deg * deg);
    }
    const double r = ratio(trial);
    if (r > best_ratio) {
      best_ratio = r;
      best = trial;
    }
  }

  // Coordinate hill-climbing with step halving.
  double scale = 0.0;
  for (double a : best) scale = std::max(scale, std::abs(a));
  double step = 0.25 * scale;
  for (int sweep = 0; sweep < 2000 && step > 1e-9 * scale; ++sweep) {
    bool improved = false;
    for (std::size_t k = 0; k < nm; ++k)
      for (double dir : {1.0, -1.0}) {
        trial = best;
        trial[k] += dir * step;
        const double r = ratio(trial);
        if (r > best_ratio) {
          best_ratio = r;
          best = trial;
          improved = true;
        }
      }
    if (!improved) step *= 0.5;
  }
  return best_ratio;
}

namespace {

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw std::runtime_error("field binary: truncated input");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_field_csv(std::ostream& os, const Field& v) {
  static const char* names[] = {"x", "y", "z"};
  const Mesh& m = v.mesh();
  for (int a = 0; a < m.dim(); ++a) os << names[a] << ',';
  os << "value\n";
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto x = m.coords(i);
    for (int a = 0; a < m.dim(); ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", x[a]);
      os << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    os << buf << '\n';
  }
}

Field read_field_csv(std::istream& is, const Mesh& mesh) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("field csv: empty input");
  std::vector<double> values;
  values.reserve(mesh.size());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto pos = line.find_last_of(',');
    const std::string last = pos == std::string::npos ? line : line.substr(pos + 1);
    values.push_back(std::stod(last));
  }
  return Field(mesh, std::move(values));
}

void write_field_binary(std::ostream& os, const Field& v) {
  const Mesh& m = v.mesh();
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.dim()));
  for (int a = 0; a < m.dim(); ++a) put_le<std::uint64_t>(os, m.count(a));
  for (int a = 0; a < m.dim(); ++a) put_le<double>(os, m.spacing(a));
  for (double x : v.values()) put_le<double>(os, x);
}

Field read_field_binary(std::istream& is) {
  const auto dim = get_le<std::uint32_t>(is);
  if (dim < 1 || dim > 3) throw std::runtime_error("field binary: bad dimension");
  std::vector<std::size_t> counts(dim);
  std::vector<double> lengths(dim);
  for (auto& c : counts) c = get_le<std::uint64_t>(is);
  for (std::uint32_t a = 0; a < dim; ++a) lengths[a] = get_le<double>(is) * static_cast<double>(counts[a] - 1);
  Mesh mesh(lengths, counts);
  std::vector<double> values(mesh.size());
  for (double& x : values) x = get_le<double>(is);
  return Field(mesh, std::move(values));
}

}  // namespace pfsmc

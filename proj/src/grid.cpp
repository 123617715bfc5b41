#include "tumorinv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace tumorinv {

namespace {

void check_axis(const Axis& a, const char* name) {
  if (a.cells < 4) {
    throw std::invalid_argument(std::string("grid: axis ") + name + " needs at least 4 cells, got " +
                                std::to_string(a.cells));
  }
  if (!(a.hi > a.lo) || !std::isfinite(a.lo) || !std::isfinite(a.hi)) {
    throw std::invalid_argument(std::string("grid: axis ") + name + " has degenerate bounds");
  }
}

}  // namespace

Grid::Grid(Axis x) : dim_(1), x_(x) { check_axis(x_, "x"); }

Grid::Grid(Axis x, Axis y) : dim_(2), x_(x), y_(y) {
  check_axis(x_, "x");
  check_axis(y_, "y");
}

Grid build_grid(int dim, std::span<const double> bounds, std::span<const int> cells) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("grid: dim must be 1 or 2");
  if (bounds.size() != static_cast<std::size_t>(2 * dim) || cells.size() != static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("grid: expected 2 bounds and 1 cell count per axis");
  }
  Axis x{bounds[0], bounds[1], cells[0]};
  if (dim == 1) return Grid(x);
  return Grid(x, Axis{bounds[2], bounds[3], cells[1]});
}

DensityField initial_density_flower(const Grid& grid, double cx, double cy, double amplitude) {
  DensityField rho(grid);
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const double dx = grid.xc(i) - cx;
      const double dy = grid.yc(j) - cy;
      const double r = std::hypot(dx, dy);
      // atan2(0, 0) = 0, so the centre itself is inside.
      const double theta = std::atan2(dy, dx);
      const bool inside = r - 0.5 - 0.5 * std::sin(4.0 * theta) < 0.0;
      rho[grid.cell(i, j)] = inside ? amplitude : 0.0;
    }
  }
  return rho;
}

DensityField initial_density_disk(const Grid& grid, double radius2, double amplitude, double cx,
                                  double cy) {
  DensityField rho(grid);
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const double dx = grid.xc(i) - cx;
      const double dy = grid.yc(j) - cy;
      rho[grid.cell(i, j)] = dx * dx + dy * dy < radius2 ? amplitude : 0.0;
    }
  }
  return rho;
}

FaceField face_average(const Grid& grid, const CellField& rho) {
  FaceField out(grid);
  const int nx = grid.nx();
  const int ny = grid.ny();
  for (int j = 0; j < ny; ++j) {
    out.x[grid.x_face(0, j)] = rho[grid.cell(0, j)];
    out.x[grid.x_face(nx, j)] = rho[grid.cell(nx - 1, j)];
    for (int i = 1; i < nx; ++i) {
      out.x[grid.x_face(i, j)] = 0.5 * (rho[grid.cell(i - 1, j)] + rho[grid.cell(i, j)]);
    }
  }
  if (grid.dim() == 2) {
    for (int i = 0; i < nx; ++i) {
      out.y[grid.y_face(i, 0)] = rho[grid.cell(i, 0)];
      out.y[grid.y_face(i, ny)] = rho[grid.cell(i, ny - 1)];
      for (int j = 1; j < ny; ++j) {
        out.y[grid.y_face(i, j)] = 0.5 * (rho[grid.cell(i, j - 1)] + rho[grid.cell(i, j)]);
      }
    }
  }
  return out;
}

double minmod(double a, double b) {
  if (a > 0.0 && b > 0.0) return std::min(a, b);
  if (a < 0.0 && b < 0.0) return std::max(a, b);
  return 0.0;
}

double minmod_slope(double left, double center, double right, double dx) {
  return minmod((center - left) / dx, (right - center) / dx);
}

double total_mass(const Grid& grid, const CellField& rho) {
  double sum = 0.0;
  for (double v : rho.values) sum += v;
  return sum * grid.cell_volume();
}

double l1_distance(const Grid& grid, const CellField& a, const CellField& b) {
  if (a.size() != b.size()) throw std::invalid_argument("l1_distance: size mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += std::abs(a[k] - b[k]);
  return sum * grid.cell_volume();
}

double max_value(const CellField& f) {
  return f.values.empty() ? 0.0 : *std::max_element(f.values.begin(), f.values.end());
}

double min_value(const CellField& f) {
  return f.values.empty() ? 0.0 : *std::min_element(f.values.begin(), f.values.end());
}

double sample_bilinear(const Grid& grid, const CellField& f, double x, double y) {
  auto locate = [](const Axis& a, int n, double v, int& i0, double& w) {
    double s = (v - a.lo) / a.spacing() - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(n - 1));
    i0 = std::min(static_cast<int>(std::floor(s)), n - 2);
    w = s - i0;
  };
  int i0 = 0;
  double wx = 0.0;
  locate(grid.x_axis(), grid.nx(), x, i0, wx);
  if (grid.dim() == 1) {
    return (1.0 - wx) * f[grid.cell(i0, 0)] + wx * f[grid.cell(i0 + 1, 0)];
  }
  int j0 = 0;
  double wy = 0.0;
  locate(grid.y_axis(), grid.ny(), y, j0, wy);
  const double f00 = f[grid.cell(i0, j0)];
  const double f10 = f[grid.cell(i0 + 1, j0)];
  const double f01 = f[grid.cell(i0, j0 + 1)];
  const double f11 = f[grid.cell(i0 + 1, j0 + 1)];
  return (1.0 - wy) * ((1.0 - wx) * f00 + wx * f10) + wy * ((1.0 - wx) * f01 + wx * f11);
}

double level_set_radius(const Grid& grid, const CellField& f, double level, double cx, double cy,
                        int rays) {
  const double step = 0.05 * std::min(grid.dx(), grid.dim() == 2 ? grid.dy() : grid.dx());
  const double reach = std::hypot(grid.x_axis().length(), grid.dim() == 2 ? grid.y_axis().length() : 0.0);
  const int n_rays = grid.dim() == 2 ? rays : 2;
  double sum = 0.0;
  int found = 0;
  for (int k = 0; k < n_rays; ++k) {
    const double angle = 2.0 * std::numbers::pi * (k + 0.5) / n_rays;
    const double ex = grid.dim() == 2 ? std::cos(angle) : (k == 0 ? 1.0 : -1.0);
    const double ey = grid.dim() == 2 ? std::sin(angle) : 0.0;
    double prev_r = 0.0;
    double prev_v = sample_bilinear(grid, f, cx, cy);
    if (prev_v < level) continue;
    for (double r = step; r < reach; r += step) {
      const double v = sample_bilinear(grid, f, cx + r * ex, cy + r * ey);
      if (v < level) {
        sum += prev_r + (prev_v - level) / (prev_v - v) * (r - prev_r);
        ++found;
        break;
      }
      prev_r = r;
      prev_v = v;
    }
  }
  return found == 0 ? 0.0 : sum / found;
}

void write_snapshot(const std::filesystem::path& path, const Grid& grid, const CellField& f, double time) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      if (i) out << ' ';
      out << f[grid.cell(i, j)];
    }
    out << '\n';
  }
  std::ofstream meta(path.string() + ".meta");
  if (!meta) throw std::runtime_error("cannot write " + path.string() + ".meta");
  meta << std::setprecision(std::numeric_limits<double>::max_digits10);
  meta << "dim=" << grid.dim() << '\n';
  meta << "x_bounds=" << grid.x_axis().lo << ',' << grid.x_axis().hi << '\n';
  meta << "nx=" << grid.nx() << '\n';
  if (grid.dim() == 2) {
    meta << "y_bounds=" << grid.y_axis().lo << ',' << grid.y_axis().hi << '\n';
    meta << "ny=" << grid.ny() << '\n';
  }
  meta << "time=" << time << '\n';
}

SnapshotFile read_snapshot(const std::filesystem::path& path) {
  std::ifstream meta(path.string() + ".meta");
  if (!meta) throw std::runtime_error("cannot read " + path.string() + ".meta");
  int dim = 0;
  int nx = 0;
  int ny = 1;
  Axis x;
  Axis y;
  double time = 0.0;
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    std::replace(value.begin(), value.end(), ',', ' ');
    std::istringstream in(value);
    if (key == "dim") in >> dim;
    else if (key == "x_bounds") in >> x.lo >> x.hi;
    else if (key == "y_bounds") in >> y.lo >> y.hi;
    else if (key == "nx") in >> nx;
    else if (key == "ny") in >> ny;
    else if (key == "time") in >> time;
  }
  x.cells = nx;
  y.cells = ny;
  SnapshotFile snap;
  snap.grid = dim == 2 ? Grid(x, y) : Grid(x);
  snap.time = time;
  snap.field = CellField(snap.grid);
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  for (std::size_t k = 0; k < snap.field.size(); ++k) {
    if (!(in >> snap.field[k])) throw std::runtime_error("snapshot " + path.string() + " is truncated");
  }
  return snap;
}

}  // namespace tumorinv

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tumorinv {

/// One uniform axis of a rectangular mesh: `cells` cells covering [lo, hi].
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  int cells = 4;

  double spacing() const { return (hi - lo) / cells; }
  double center(int i) const { return lo + (i + 0.5) * spacing(); }
  /// Coordinate of face i, i = 0..cells (0 and cells are boundary faces).
  double face(int i) const { return lo + i * spacing(); }
  bool operator==(const Axis&) const = default;
  double length() const { return hi - lo; }
};

/// Uniform 1D or 2D cell-centred grid with staggered faces.
///
/// A 1D grid is stored as a 2D grid with a single row of unit height, so
/// every field routine works for both cases. In 1D there are no y-faces.
class Grid {
 public:
  Grid() = default;
  explicit Grid(Axis x);
  Grid(Axis x, Axis y);

  int dim() const { return dim_; }
  const Axis& x_axis() const { return x_; }
  const Axis& y_axis() const { return y_; }

  int nx() const { return x_.cells; }
  int ny() const { return dim_ == 2 ? y_.cells : 1; }
  double dx() const { return x_.spacing(); }
  double dy() const { return dim_ == 2 ? y_.spacing() : 1.0; }
  double cell_volume() const { return dx() * dy(); }
  std::size_t cell_count() const { return static_cast<std::size_t>(nx()) * ny(); }

  double xc(int i) const { return x_.center(i); }
  double yc(int j) const { return dim_ == 2 ? y_.center(j) : 0.0; }

  std::size_t cell(int i, int j) const { return static_cast<std::size_t>(j) * nx() + i; }

  /// x-faces: (nx+1) per row, ny rows. Face (i, j) sits at x_lo + i*dx.
  std::size_t x_face_count() const { return static_cast<std::size_t>(nx() + 1) * ny(); }
  std::size_t x_face(int i, int j) const { return static_cast<std::size_t>(j) * (nx() + 1) + i; }
  /// y-faces: nx per row, ny+1 rows. Empty in 1D.
  std::size_t y_face_count() const {
    return dim_ == 2 ? static_cast<std::size_t>(nx()) * (ny() + 1) : 0;
  }
  std::size_t y_face(int i, int j) const { return static_cast<std::size_t>(j) * nx() + i; }

  bool operator==(const Grid&) const = default;

 private:
  int dim_ = 1;
  Axis x_{};
  Axis y_{0.0, 1.0, 1};
};

/// Builds a grid; `bounds` holds (lo, hi) per axis, `cells` the count per axis.
/// Throws std::invalid_argument for n < 4 or hi <= lo.
Grid build_grid(int dim, std::span<const double> bounds, std::span<const int> cells);

/// Cell-centred scalar values, row-major with x fastest.
struct CellField {
  std::vector<double> values;

  CellField() = default;
  explicit CellField(const Grid& grid, double fill = 0.0) : values(grid.cell_count(), fill) {}
  explicit CellField(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }
};

/// Cell density rho. Values are non-negative and finite.
struct DensityField : CellField {
  using CellField::CellField;
};

/// Cell growth rate h(x), units 1/time.
struct GrowthField : CellField {
  using CellField::CellField;
};

/// Face-centred values on the staggered grid.
struct FaceField {
  std::vector<double> x;  ///< on x-faces
  std::vector<double> y;  ///< on y-faces (empty in 1D)

  FaceField() = default;
  explicit FaceField(const Grid& grid, double fill = 0.0)
      : x(grid.x_face_count(), fill), y(grid.y_face_count(), fill) {}
};

/// Face velocity u (= -grad p). Zero on boundary faces.
struct VelocityField : FaceField {
  using FaceField::FaceField;
};

/// Indicator of the four-petal "flower" region around `center`, times amplitude.
DensityField initial_density_flower(const Grid& grid, double cx, double cy, double amplitude);

/// Indicator of {(x-cx)^2 + (y-cy)^2 < radius2}, times amplitude.
DensityField initial_density_disk(const Grid& grid, double radius2, double amplitude, double cx = 0.0,
                                  double cy = 0.0);

/// Arithmetic mean of the two adjacent cells on every interior face.
/// Boundary faces copy their single adjacent cell.
FaceField face_average(const Grid& grid, const CellField& rho);

double minmod(double a, double b);

/// Limited slope from three consecutive cell values.
double minmod_slope(double left, double center, double right, double dx);

double total_mass(const Grid& grid, const CellField& rho);
double l1_distance(const Grid& grid, const CellField& a, const CellField& b);
double max_value(const CellField& f);
double min_value(const CellField& f);

/// Bilinear interpolation of a cell-centred field; clamps to the outermost centres.
double sample_bilinear(const Grid& grid, const CellField& f, double x, double y);

/// Mean radius of the `level` set around (cx, cy), found by marching `rays`
/// rays outward and locating the first downward crossing on each.
double level_set_radius(const Grid& grid, const CellField& f, double level, double cx = 0.0,
                        double cy = 0.0, int rays = 64);

/// Writes `path` (whitespace matrix, one row per y index) and `path` + ".meta".
void write_snapshot(const std::filesystem::path& path, const Grid& grid, const CellField& f,
                    double time);

struct SnapshotFile {
  Grid grid;
  CellField field;
  double time = 0.0;
};

SnapshotFile read_snapshot(const std::filesystem::path& path);

}  // namespace tumorinv

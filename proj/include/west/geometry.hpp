#pragma once

#include <string>
#include <vector>

namespace west {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

double dist(const Point& a, const Point& b);

struct Segment {
    Point p1;
    Point p2;

    double length() const;
};

/// Convex cell of a planar partition; the graph node. Borders walk the
/// polygon counter-clockwise and close back on the first vertex.
struct Region {
    int index = 0;
    Point center;
    std::vector<Segment> borders;

    std::vector<Point> vertices() const;
};

struct BBox {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double diagonal() const;
    bool contains(const Point& p) const;
    bool strictly_contains(const Point& p) const;
};

/// Extent of a point cloud expanded by the given fraction per side.
BBox bbox_of_points(const std::vector<Point>& points, double expand_fraction);

struct WeightedAdjacency {
    int n = 0;
    std::vector<double> entries; // row-major n*n

    WeightedAdjacency() = default;
    explicit WeightedAdjacency(int n_) : n(n_), entries(static_cast<std::size_t>(n_) * n_, 0.0) {}

    double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * n + j]; }
    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * n + j]; }
};

/// Lloyd's algorithm with seeded farthest-point initialization. Deterministic
/// for a fixed seed; stops when no centroid moves more than 1e-9 or after
/// max_iter sweeps.
std::vector<Point> kmeans_centers(const std::vector<Point>& points, int k,
                                  std::uint64_t seed, int max_iter = 100);

/// One convex cell per center, built by clipping bbox against the
/// perpendicular bisector half-plane of every other center.
std::vector<Region> voronoi_partition(const std::vector<Point>& centers, const BBox& bbox);

/// Euclidean length of the overlap of two collinear segments; 0 when the
/// segments are not parallel, or parallel but carried by lines further than
/// tol apart. Commutative and invariant to endpoint order.
double shared_border_length(const Segment& s1, const Segment& s2, double tol);

double region_perimeter(const Region& r);

/// Off-diagonal (i,j): summed overlap length over all border pairs of regions
/// i and j. Diagonal: the region's perimeter. Symmetric, not yet normalized.
WeightedAdjacency shared_borders_adjacency(const std::vector<Region>& regions, double tol);

/// Divides every entry by the global maximum. Throws AllZero on a zero matrix.
WeightedAdjacency normalize_adjacency_weights(const WeightedAdjacency& a);

/// Default collinearity tolerance for a partition of the given box.
double default_border_tol(const BBox& bbox);

/// True when p lies inside or on the boundary of the convex region (tol expands
/// the region by that distance).
bool region_contains(const Region& r, const Point& p, double tol);

/// Builds a region from a counter-clockwise vertex loop.
Region make_region(int index, const Point& center, const std::vector<Point>& vertices);

// persistence ---------------------------------------------------------------

std::string regions_to_json(const std::vector<Region>& regions, const BBox& bbox);
void save_regions(const std::string& path, const std::vector<Region>& regions, const BBox& bbox);
std::pair<std::vector<Region>, BBox> load_regions(const std::string& path);

std::string adjacency_to_csv(const WeightedAdjacency& a);
void save_adjacency(const std::string& path, const WeightedAdjacency& a);
WeightedAdjacency load_adjacency(const std::string& path);

} // namespace west

#include "west/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "west/errors.hpp"
#include "west/util.hpp"

namespace west {

double dist(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double Segment::length() const { return dist(p1, p2); }

std::vector<Point> Region::vertices() const {
    std::vector<Point> vs;
    vs.reserve(borders.size());
    for (const auto& s : borders) vs.push_back(s.p1);
    return vs;
}

double BBox::diagonal() const { return std::hypot(width(), height()); }

bool BBox::contains(const Point& p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
}

bool BBox::strictly_contains(const Point& p) const {
    return p.x > xmin && p.x < xmax && p.y > ymin && p.y < ymax;
}

BBox bbox_of_points(const std::vector<Point>& points, double expand_fraction) {
    if (points.empty()) throw EmptyInput("bbox_of_points: no points");
    BBox b{points[0].x, points[0].y, points[0].x, points[0].y};
    for (const auto& p : points) {
        b.xmin = std::min(b.xmin, p.x);
        b.ymin = std::min(b.ymin, p.y);
        b.xmax = std::max(b.xmax, p.x);
        b.ymax = std::max(b.ymax, p.y);
    }
    double dx = b.width() * expand_fraction;
    double dy = b.height() * expand_fraction;
    // degenerate extent still needs a usable box
    if (dx == 0.0) dx = 1.0;
    if (dy == 0.0) dy = 1.0;
    return BBox{b.xmin - dx, b.ymin - dy, b.xmax + dx, b.ymax + dy};
}

Region make_region(int index, const Point& center, const std::vector<Point>& vertices) {
    if (vertices.size() < 3) throw DegenerateInput("make_region: fewer than 3 vertices");
    Region r;
    r.index = index;
    r.center = center;
    r.borders.reserve(vertices.size());
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        r.borders.push_back(Segment{vertices[i], vertices[(i + 1) % vertices.size()]});
    }
    return r;
}

// k-means --------------------------------------------------------------------

namespace {

std::size_t nearest_center(const Point& p, const std::vector<Point>& centers) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        double d = dist(p, centers[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

} // namespace

std::vector<Point> kmeans_centers(const std::vector<Point>& points, int k,
                                  std::uint64_t seed, int max_iter) {
    if (points.empty()) throw EmptyInput("kmeans_centers: no points");
    if (k < 1) throw InvalidConfig("kmeans_centers: k must be >= 1");
    if (max_iter < 1) throw InvalidConfig("kmeans_centers: max_iter must be >= 1");

    std::vector<Point> distinct;
    {
        std::set<std::pair<double, double>> seen;
        for (const auto& p : points) {
            if (seen.insert({p.x, p.y}).second) distinct.push_back(p);
        }
    }
    if (static_cast<int>(distinct.size()) < k) {
        throw DegenerateInput("kmeans_centers: only " + std::to_string(distinct.size()) +
                              " distinct points for k=" + std::to_string(k));
    }

    // seeded first pick, then farthest-point refinement over distinct points
    Rng rng(seed);
    std::vector<Point> centers;
    centers.push_back(distinct[rng.uniform_index(distinct.size())]);
    while (static_cast<int>(centers.size()) < k) {
        std::size_t far_idx = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < distinct.size(); ++i) {
            double d = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) d = std::min(d, dist(distinct[i], c));
            if (d > far_d) {
                far_d = d;
                far_idx = i;
            }
        }
        centers.push_back(distinct[far_idx]);
    }

    std::vector<std::size_t> assign(points.size(), 0);
    for (int iter = 0; iter < max_iter; ++iter) {
        for (std::size_t i = 0; i < points.size(); ++i) assign[i] = nearest_center(points[i], centers);

        std::vector<double> sx(centers.size(), 0.0), sy(centers.size(), 0.0);
        std::vector<std::size_t> cnt(centers.size(), 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            sx[assign[i]] += points[i].x;
            sy[assign[i]] += points[i].y;
            cnt[assign[i]] += 1;
        }

        double max_move = 0.0;
        for (std::size_t c = 0; c < centers.size(); ++c) {
            Point next = centers[c];
            if (cnt[c] > 0) {
                next = Point{sx[c] / static_cast<double>(cnt[c]), sy[c] / static_cast<double>(cnt[c])};
            } else {
                // re-seed an emptied cluster with the point farthest from its centroid
                double far_d = -1.0;
                for (std::size_t i = 0; i < points.size(); ++i) {
                    double d = dist(points[i], centers[assign[i]]);
                    if (d > far_d) {
                        far_d = d;
                        next = points[i];
                    }
                }
            }
            max_move = std::max(max_move, dist(centers[c], next));
            centers[c] = next;
        }
        if (max_move < 1e-9) break;
    }
    return centers;
}

// Voronoi ---------------------------------------------------------------------

namespace {

// Sutherland-Hodgman clip keeping the side where n.(p - m) <= 0.
std::vector<Point> clip_halfplane(const std::vector<Point>& poly, const Point& m,
                                  double nx, double ny) {
    std::vector<Point> out;
    const std::size_t n = poly.size();
    if (n == 0) return out;
    auto side = [&](const Point& p) { return nx * (p.x - m.x) + ny * (p.y - m.y); };
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = poly[i];
        const Point& b = poly[(i + 1) % n];
        const double sa = side(a);
        const double sb = side(b);
        auto cross_point = [&]() {
            double t = sa / (sa - sb);
            return Point{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
        };
        if (sa <= 0.0) {
            out.push_back(a);
            if (sb > 0.0) out.push_back(cross_point());
        } else if (sb <= 0.0) {
            out.push_back(cross_point());
        }
    }
    return out;
}

std::vector<Point> dedupe_ring(const std::vector<Point>& poly, double eps) {
    std::vector<Point> out;
    for (const auto& p : poly) {
        if (out.empty() || dist(out.back(), p) > eps) out.push_back(p);
    }
    while (out.size() > 1 && dist(out.front(), out.back()) <= eps) out.pop_back();
    return out;
}

} // namespace

std::vector<Region> voronoi_partition(const std::vector<Point>& centers, const BBox& bbox) {
    if (centers.size() < 2) throw DegenerateInput("voronoi_partition: need at least 2 centers");
    for (std::size_t i = 0; i < centers.size(); ++i) {
        if (!bbox.strictly_contains(centers[i])) {
            throw CenterOutsideBox("voronoi_partition: center " + std::to_string(i) +
                                   " is not strictly inside the bounding box");
        }
        for (std::size_t j = i + 1; j < centers.size(); ++j) {
            if (dist(centers[i], centers[j]) < 1e-12) {
                throw DuplicateCenters("voronoi_partition: centers " + std::to_string(i) + " and " +
                                       std::to_string(j) + " coincide");
            }
        }
    }

    const double eps = 1e-12 * std::max(1.0, bbox.diagonal());
    std::vector<Region> regions;
    regions.reserve(centers.size());
    for (std::size_t i = 0; i < centers.size(); ++i) {
        std::vector<Point> poly = {{bbox.xmin, bbox.ymin},
                                   {bbox.xmax, bbox.ymin},
                                   {bbox.xmax, bbox.ymax},
                                   {bbox.xmin, bbox.ymax}};
        for (std::size_t j = 0; j < centers.size(); ++j) {
            if (j == i) continue;
            const Point m{(centers[i].x + centers[j].x) * 0.5, (centers[i].y + centers[j].y) * 0.5};
            poly = clip_halfplane(poly, m, centers[j].x - centers[i].x, centers[j].y - centers[i].y);
            if (poly.empty()) break;
        }
        poly = dedupe_ring(poly, eps);
        if (poly.size() < 3) {
            throw DegenerateInput("voronoi_partition: cell " + std::to_string(i) + " collapsed");
        }
        regions.push_back(make_region(static_cast<int>(i), centers[i], poly));
    }
    return regions;
}

// shared borders ---------------------------------------------------------------

double shared_border_length(const Segment& s1, const Segment& s2, double tol) {
    const double d1x = s1.p2.x - s1.p1.x, d1y = s1.p2.y - s1.p1.y;
    const double d2x = s2.p2.x - s2.p1.x, d2y = s2.p2.y - s2.p1.y;
    const double len1 = std::hypot(d1x, d1y);
    const double len2 = std::hypot(d2x, d2y);
    if (len1 == 0.0 || len2 == 0.0) return 0.0;

    // canonical carrier direction: longer segment wins, sign-normalized tie-break
    double vx, vy, vlen;
    if (len1 > len2) {
        vx = d1x; vy = d1y; vlen = len1;
    } else if (len2 > len1) {
        vx = d2x; vy = d2y; vlen = len2;
    } else {
        double a1x = d1x, a1y = d1y;
        if (a1x < 0.0 || (a1x == 0.0 && a1y < 0.0)) { a1x = -a1x; a1y = -a1y; }
        double a2x = d2x, a2y = d2y;
        if (a2x < 0.0 || (a2x == 0.0 && a2y < 0.0)) { a2x = -a2x; a2y = -a2y; }
        if (a1x > a2x || (a1x == a2x && a1y >= a2y)) { vx = a1x; vy = a1y; }
        else { vx = a2x; vy = a2y; }
        vlen = len1;
    }
    const double ux = vx / vlen, uy = vy / vlen;

    // collinearity: every endpoint must sit within tol of the common carrier.
    // This one test covers crossing, parallel-but-offset, and collinear cases.
    auto offset = [&](const Point& ref, const Point& p) {
        return std::fabs(ux * (p.y - ref.y) - uy * (p.x - ref.x));
    };
    const double line_gap = std::max(std::max(offset(s1.p1, s2.p1), offset(s1.p1, s2.p2)),
                                     std::max(offset(s2.p1, s1.p1), offset(s2.p1, s1.p2)));
    if (line_gap >= tol) return 0.0;

    // 1-D interval intersection along the carrier
    auto proj = [&](const Point& p) { return p.x * ux + p.y * uy; };
    const double t1a = proj(s1.p1), t1b = proj(s1.p2);
    const double t2a = proj(s2.p1), t2b = proj(s2.p2);
    const double lo = std::max(std::min(t1a, t1b), std::min(t2a, t2b));
    const double hi = std::min(std::max(t1a, t1b), std::max(t2a, t2b));
    return hi > lo ? hi - lo : 0.0;
}

double region_perimeter(const Region& r) {
    double total = 0.0;
    for (const auto& s : r.borders) total += s.length();
    return total;
}

WeightedAdjacency shared_borders_adjacency(const std::vector<Region>& regions, double tol) {
    if (regions.size() < 2) throw DegenerateInput("shared_borders_adjacency: need at least 2 regions");
    const int n = static_cast<int>(regions.size());
    WeightedAdjacency a(n);
    for (int i = 0; i < n; ++i) {
        a.at(i, i) = region_perimeter(regions[i]);
        for (int j = i + 1; j < n; ++j) {
            double total = 0.0;
            for (const auto& bi : regions[i].borders) {
                for (const auto& bj : regions[j].borders) {
                    total += shared_border_length(bi, bj, tol);
                }
            }
            a.at(i, j) = total;
            a.at(j, i) = total;
        }
    }
    return a;
}

WeightedAdjacency normalize_adjacency_weights(const WeightedAdjacency& a) {
    double max_entry = 0.0;
    for (double v : a.entries) max_entry = std::max(max_entry, v);
    if (max_entry <= 0.0) throw AllZero("normalize_adjacency_weights: zero matrix");
    WeightedAdjacency out(a.n);
    for (std::size_t i = 0; i < a.entries.size(); ++i) out.entries[i] = a.entries[i] / max_entry;
    return out;
}

double default_border_tol(const BBox& bbox) { return 1e-9 * bbox.diagonal(); }

bool region_contains(const Region& r, const Point& p, double tol) {
    for (const auto& s : r.borders) {
        const double ex = s.p2.x - s.p1.x, ey = s.p2.y - s.p1.y;
        const double len = std::hypot(ex, ey);
        if (len == 0.0) continue;
        const double cross = ex * (p.y - s.p1.y) - ey * (p.x - s.p1.x);
        if (cross / len < -tol) return false;
    }
    return true;
}

// persistence --------------------------------------------------------------

std::string regions_to_json(const std::vector<Region>& regions, const BBox& bbox) {
    nlohmann::json j;
    j["bbox"] = {bbox.xmin, bbox.ymin, bbox.xmax, bbox.ymax};
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : regions) {
        nlohmann::json jr;
        jr["index"] = r.index;
        jr["center"] = {r.center.x, r.center.y};
        nlohmann::json verts = nlohmann::json::array();
        for (const auto& v : r.vertices()) verts.push_back({v.x, v.y});
        jr["vertices"] = verts;
        arr.push_back(jr);
    }
    j["regions"] = arr;
    return j.dump(2) + "\n";
}

void save_regions(const std::string& path, const std::vector<Region>& regions, const BBox& bbox) {
    write_text_file(path, regions_to_json(regions, bbox));
}

std::pair<std::vector<Region>, BBox> load_regions(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig("load_regions: " + std::string(e.what()));
    }
    try {
        BBox bbox{j.at("bbox").at(0), j.at("bbox").at(1), j.at("bbox").at(2), j.at("bbox").at(3)};
        std::vector<Region> regions;
        for (const auto& jr : j.at("regions")) {
            Point center{jr.at("center").at(0), jr.at("center").at(1)};
            std::vector<Point> verts;
            for (const auto& v : jr.at("vertices")) verts.push_back(Point{v.at(0), v.at(1)});
            regions.push_back(make_region(jr.at("index"), center, verts));
        }
        std::sort(regions.begin(), regions.end(),
                  [](const Region& a, const Region& b) { return a.index < b.index; });
        return {regions, bbox};
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig("load_regions: malformed document: " + std::string(e.what()));
    }
}

std::string adjacency_to_csv(const WeightedAdjacency& a) {
    std::ostringstream out;
    for (int j = 0; j < a.n; ++j) {
        if (j) out << ',';
        out << j;
    }
    out << '\n';
    for (int i = 0; i < a.n; ++i) {
        for (int j = 0; j < a.n; ++j) {
            if (j) out << ',';
            out << format_double_17(a.at(i, j));
        }
        out << '\n';
    }
    return out.str();
}

void save_adjacency(const std::string& path, const WeightedAdjacency& a) {
    write_text_file(path, adjacency_to_csv(a));
}

WeightedAdjacency load_adjacency(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw InvalidConfig("load_adjacency: empty file");
    const int n = static_cast<int>(split_csv_line(line).size());
    WeightedAdjacency a(n);
    for (int i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw InvalidConfig("load_adjacency: truncated matrix");
        auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != n) {
            throw InvalidConfig("load_adjacency: row " + std::to_string(i) + " has " +
                                std::to_string(fields.size()) + " fields, expected " + std::to_string(n));
        }
        for (int j = 0; j < n; ++j) a.at(i, j) = parse_double(fields[j]);
    }
    return a;
}

} // namespace west

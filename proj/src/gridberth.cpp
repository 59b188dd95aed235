#include "aisbay/gridberth.hpp"

#include "aisbay/parallel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>
#include <stdexcept>

namespace aisbay {

GridSpec GridSpec::from_bbox(double lat_min, double lat_max, double lon_min, double lon_max, double cell_arcsec) {
    if (!(lat_max > lat_min) || !(lon_max > lon_min) || !(cell_arcsec > 0))
        throw std::invalid_argument("grid: empty bounding box or bad cell size");
    GridSpec g;
    g.cell_deg = cell_arcsec / 3600.0;
    g.lat0 = lat_min;
    g.lon0 = lon_min;
    g.rows = static_cast<int>(std::ceil((lat_max - lat_min) / g.cell_deg - 1e-9));
    g.cols = static_cast<int>(std::ceil((lon_max - lon_min) / g.cell_deg - 1e-9));
    return g;
}

double GridSpec::cell_height_m(int row) const { return meridional_radius(row_lat(row)) * cell_deg * kDeg; }

double GridSpec::cell_width_m(int row) const {
    const double lat = row_lat(row);
    return prime_vertical_radius(lat) * std::cos(lat * kDeg) * cell_deg * kDeg;
}

double GridSpec::cell_area_km2(int row) const { return cell_height_m(row) * cell_width_m(row) * 1e-6; }

bool GridSpec::locate(const LatLon& p, int& row, int& col) const {
    // nudge so a point on a cell edge lands in the cell it opens despite decimal rounding
    const double r = std::floor((p.lat - lat0) / cell_deg + 1e-9);
    const double c = std::floor((p.lon - lon0) / cell_deg + 1e-9);
    if (r < 0 || c < 0 || r >= rows || c >= cols) return false;
    row = static_cast<int>(r);
    col = static_cast<int>(c);
    return true;
}

double Field2D::sum() const {
    double s = 0;
    for (double x : v)
        if (!std::isnan(x)) s += x;
    return s;
}

std::vector<StationaryDeposit> stationary_deposits(const VesselTimeline& tl, const std::vector<GapClassification>& gaps) {
    std::vector<StationaryDeposit> out;
    for (const auto& g : gaps) {
        if (g.verdict != Verdict::Moored) continue;
        StationaryDeposit d;
        d.mmsi = tl.mmsi;
        d.duration_s = static_cast<double>(g.end - g.start);
        Vec3 acc = Vec3::Zero();
        double member_drift = 0;
        for (const auto& sp : tl.stationary) {
            const bool inside = (g.opens_window ? sp.start >= g.start : sp.start > g.start) && sp.end < g.end;
            if (!inside) continue;
            acc += static_cast<double>(sp.message_count) * to_unit(sp.anchor);
            member_drift = std::max(member_drift, sp.drift_extent);
        }
        const Leg* prev = nullptr;
        const Leg* next = nullptr;
        for (const auto& l : tl.legs) {
            if (!g.opens_window && l.end() == g.start) prev = &l;
            if (!g.closes_window && l.start() == g.end) next = &l;
        }
        if (prev && next) {
            d.drift_m = geodesic_distance(prev->end_pos(), next->start_pos());
            if (acc.norm() == 0) acc = to_unit(to_latlon(slerp(to_unit(prev->end_pos()), to_unit(next->start_pos()), 0.5)));
        } else {
            d.drift_m = member_drift;
            if (acc.norm() == 0) {
                if (prev) acc = to_unit(prev->end_pos());
                else if (next) acc = to_unit(next->start_pos());
            }
        }
        if (acc.norm() == 0) {
            d.anchor = {std::nan(""), std::nan("")};
            d.drift_m = std::numeric_limits<double>::infinity();
        } else {
            d.anchor = to_latlon(acc.normalized());
        }
        out.push_back(d);
    }
    return out;
}

GridRaster::GridRaster(const GridSpec& s, double window)
    : spec(s),
      window_s(window),
      occupancy(s.rows, s.cols),
      speed_sum(s.rows, s.cols),
      moving_time(s.rows, s.cols),
      course_x(s.rows, s.cols),
      course_y(s.rows, s.cols) {}

void GridRaster::merge(const GridRaster& o) {
    if (o.spec.rows != spec.rows || o.spec.cols != spec.cols) throw std::invalid_argument("raster merge: grid mismatch");
    for (std::size_t i = 0; i < occupancy.v.size(); ++i) {
        occupancy.v[i] += o.occupancy.v[i];
        speed_sum.v[i] += o.speed_sum.v[i];
        moving_time.v[i] += o.moving_time.v[i];
        course_x.v[i] += o.course_x.v[i];
        course_y.v[i] += o.course_y.v[i];
    }
    deposited_s += o.deposited_s;
    land_s += o.land_s;
    clipped_s += o.clipped_s;
    excluded_stationary_s += o.excluded_stationary_s;
    excluded_stationary += o.excluded_stationary;
}

Field2D GridRaster::density() const {
    Field2D f = occupancy;
    for (auto& x : f.v) x /= window_s;
    return f;
}

Field2D GridRaster::density_km2() const {
    Field2D f = density();
    for (int r = 0; r < f.rows; ++r) {
        const double a = spec.cell_area_km2(r);
        for (int c = 0; c < f.cols; ++c) f.at(r, c) /= a;
    }
    return f;
}

Field2D GridRaster::mean_speed() const {
    Field2D f(spec.rows, spec.cols);
    for (std::size_t i = 0; i < f.v.size(); ++i)
        f.v[i] = moving_time.v[i] > 0 ? speed_sum.v[i] / moving_time.v[i] : std::nan("");
    return f;
}

Field2D GridRaster::resultant() const {
    Field2D f(spec.rows, spec.cols);
    for (std::size_t i = 0; i < f.v.size(); ++i)
        f.v[i] = moving_time.v[i] > 0 ? std::min(1.0, std::hypot(course_x.v[i], course_y.v[i]) / moving_time.v[i]) : std::nan("");
    return f;
}

namespace {

struct Deposit {
    std::size_t cell;
    double dwell;
    double speed_kn;  // < 0 for stationary deposits
    double sin_course, cos_course;
};

struct DepositBatch {
    std::vector<Deposit> deposits;
    double land = 0, clipped = 0;
};

// Time at which the vessel last sits at or before route distance s.
double leave_time(const Trajectory& tr, double s) {
    const auto& p = tr.profile;
    auto it = std::upper_bound(p.begin(), p.end(), s, [](double x, const SpeedSegment& seg) { return x < seg.s_begin; });
    if (it == p.begin()) return p.front().t_begin;
    const SpeedSegment& seg = *std::prev(it);
    if (s >= seg.s_end || seg.s_end <= seg.s_begin) return seg.t_end;
    return seg.t_begin + (s - seg.s_begin) / (seg.s_end - seg.s_begin) * (seg.t_end - seg.t_begin);
}

DepositBatch deposit_trajectory(const Trajectory& tr, const GridSpec& spec, const Geometry& geo, double spacing) {
    DepositBatch b;
    const double L = tr.length();
    const double t0 = tr.start_time(), t1 = tr.end_time();
    auto place = [&](const Vec3& u, double dwell, double speed_kn, const Vec3& dir) {
        if (dwell <= 0) return;
        const LatLon p = to_latlon(u);
        int r, c;
        if (!spec.locate(p, r, c)) {
            b.clipped += dwell;
            return;
        }
        if (geo.on_land(p)) {
            b.land += dwell;
            return;
        }
        const TangentFrame f = tangent_frame(u);
        const double e = dir.dot(f.east), n = dir.dot(f.north), h = std::hypot(e, n);
        b.deposits.push_back({spec.index(r, c), dwell, speed_kn, h > 0 ? e / h : 0.0, h > 0 ? n / h : 0.0});
    };
    if (L <= 0) {
        place(tr.route_unit.front(), t1 - t0, 0.0, Vec3::Zero());
        return b;
    }
    const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(L / spacing - 1e-9)));
    double s_prev = 0, t_prev = t0;
    for (std::size_t j = 0; j < n; ++j) {
        const double s_next = j + 1 == n ? L : L * static_cast<double>(j + 1) / static_cast<double>(n);
        const double t_next = j + 1 == n ? t1 : leave_time(tr, s_next);
        const double dwell = t_next - t_prev;
        const double mid = 0.5 * (s_prev + s_next);
        const Vec3 u = tr.unit_at_distance(mid);
        // travel direction along the containing edge
        const auto it = std::upper_bound(tr.cumdist.begin(), tr.cumdist.end(), mid);
        std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - tr.cumdist.begin())) - 1;
        k = std::min(k, tr.route_unit.size() - 2);
        const Vec3 axis = tr.route_unit[k].cross(tr.route_unit[k + 1]);
        const Vec3 dir = axis.norm() > 0 ? Vec3(axis.normalized().cross(u)) : Vec3::Zero();
        const double speed_kn = dwell > 0 ? (s_next - s_prev) / dwell / kKnot : 0.0;
        place(u, dwell, speed_kn, dir);
        s_prev = s_next;
        t_prev = t_next;
    }
    return b;
}

}  // namespace

GridRaster accumulate(const std::vector<Trajectory>& trajectories, const std::vector<StationaryDeposit>& stationary,
                      const GridSpec& spec, const Geometry& geometry, double window_s, const AccumulateOptions& opt,
                      unsigned threads) {
    if (!(opt.spacing_m > 0)) throw std::invalid_argument("accumulate: spacing must be positive");
    if (!(window_s > 0)) throw std::invalid_argument("accumulate: window must be positive");
    GridRaster g(spec, window_s);
    std::vector<DepositBatch> batches(trajectories.size());
    parallel_for(trajectories.size(), threads,
                 [&](std::size_t i) { batches[i] = deposit_trajectory(trajectories[i], spec, geometry, opt.spacing_m); });
    for (const auto& b : batches) {
        g.land_s += b.land;
        g.clipped_s += b.clipped;
        for (const auto& d : b.deposits) {
            g.occupancy.v[d.cell] += d.dwell;
            g.deposited_s += d.dwell;
            g.speed_sum.v[d.cell] += d.speed_kn * d.dwell;
            g.moving_time.v[d.cell] += d.dwell;
            g.course_x.v[d.cell] += d.sin_course * d.dwell;
            g.course_y.v[d.cell] += d.cos_course * d.dwell;
        }
    }
    for (const auto& s : stationary) {
        if (!(s.drift_m <= opt.max_drift_m)) {
            g.excluded_stationary_s += s.duration_s;
            ++g.excluded_stationary;
            continue;
        }
        int r, c;
        if (!spec.locate(s.anchor, r, c)) {
            g.clipped_s += s.duration_s;
            continue;
        }
        if (geometry.on_land(s.anchor)) {
            g.land_s += s.duration_s;
            continue;
        }
        g.occupancy.at(r, c) += s.duration_s;
        g.deposited_s += s.duration_s;
    }
    return g;
}

namespace {

// Half-sample symmetric reflection into [0, n).
int reflect(int i, int n) {
    const int period = 2 * n;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
}

}  // namespace

Field2D smooth(const Field2D& in, double sigma) {
    if (!(sigma > 0)) return in;
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> w(2 * radius + 1);
    double ws = 0;
    for (int k = -radius; k <= radius; ++k) ws += w[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    for (auto& x : w) x /= ws;
    Field2D tmp(in.rows, in.cols), out(in.rows, in.cols);
    for (int r = 0; r < in.rows; ++r)
        for (int c = 0; c < in.cols; ++c) {
            double s = 0;
            for (int k = -radius; k <= radius; ++k) s += w[k + radius] * in.at(r, reflect(c + k, in.cols));
            tmp.at(r, c) = s;
        }
    for (int r = 0; r < in.rows; ++r)
        for (int c = 0; c < in.cols; ++c) {
            double s = 0;
            for (int k = -radius; k <= radius; ++k) s += w[k + radius] * tmp.at(reflect(r + k, in.rows), c);
            out.at(r, c) = s;
        }
    return out;
}

Detection detect_berths(const Field2D& f, const GridSpec& spec, double seed_threshold, double support_threshold) {
    const int R = f.rows, C = f.cols;
    if (R != spec.rows || C != spec.cols) throw std::invalid_argument("detect_berths: field does not match grid");
    Detection det;
    det.labels.assign(f.v.size(), 0);
    auto support = [&](std::size_t i) { return f.v[i] >= support_threshold; };
    auto for_neighbours = [&](std::size_t i, auto&& fn) {
        const int r = static_cast<int>(i / C), c = static_cast<int>(i % C);
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
                if (!dr && !dc) continue;
                const int rr = r + dr, cc = c + dc;
                if (rr >= 0 && rr < R && cc >= 0 && cc < C) fn(static_cast<std::size_t>(rr) * C + cc);
            }
    };

    // seeds: plateaus (equal-valued 8-connected sets) with no higher neighbour
    std::vector<char> visited(f.v.size(), 0);
    int next_label = 0;
    for (std::size_t i = 0; i < f.v.size(); ++i) {
        if (visited[i] || !(f.v[i] >= seed_threshold)) continue;
        std::vector<std::size_t> comp{i};
        visited[i] = 1;
        bool is_max = true;
        for (std::size_t q = 0; q < comp.size(); ++q)
            for_neighbours(comp[q], [&](std::size_t j) {
                if (f.v[j] > f.v[i]) is_max = false;
                if (!visited[j] && f.v[j] == f.v[i]) {
                    visited[j] = 1;
                    comp.push_back(j);
                }
            });
        if (!is_max) continue;
        ++next_label;
        for (auto j : comp) det.labels[j] = next_label;
    }

    struct Item {
        double v;
        std::uint64_t order;
        std::size_t cell;
        int label;
    };
    auto cmp = [](const Item& a, const Item& b) { return a.v != b.v ? a.v < b.v : a.order > b.order; };
    std::priority_queue<Item, std::vector<Item>, decltype(cmp)> pq(cmp);
    std::vector<char> queued(f.v.size(), 0);
    std::uint64_t counter = 0;
    auto push_neighbours = [&](std::size_t i, int label) {
        for_neighbours(i, [&](std::size_t j) {
            if (det.labels[j] == 0 && !queued[j] && support(j)) {
                queued[j] = 1;
                pq.push({f.v[j], counter++, j, label});
            }
        });
    };
    for (std::size_t i = 0; i < f.v.size(); ++i)
        if (det.labels[i]) push_neighbours(i, det.labels[i]);
    while (!pq.empty()) {
        const Item it = pq.top();
        pq.pop();
        if (det.labels[it.cell]) continue;
        det.labels[it.cell] = it.label;
        push_neighbours(it.cell, it.label);
    }

    det.areas.resize(next_label);
    std::vector<Vec3> acc(next_label, Vec3::Zero());
    for (int k = 0; k < next_label; ++k) det.areas[k].id = k + 1;
    for (std::size_t i = 0; i < f.v.size(); ++i) {
        const int l = det.labels[i];
        if (!l) continue;
        const int r = static_cast<int>(i / C), c = static_cast<int>(i % C);
        BerthArea& a = det.areas[l - 1];
        a.cells.emplace_back(r, c);
        a.area_km2 += spec.cell_area_km2(r);
        a.peak = std::max(a.peak, f.v[i]);
        acc[l - 1] += f.v[i] * to_unit({spec.row_lat(r), spec.col_lon(c)});
    }
    for (int k = 0; k < next_label; ++k) det.areas[k].centroid = to_latlon(acc[k].normalized());
    return det;
}

std::optional<std::pair<LatLon, double>> nearest_shore(const Geometry& geometry, const LatLon& p) {
    std::optional<std::pair<LatLon, double>> best;
    const double m = meridional_radius(p.lat);
    const double n = prime_vertical_radius(p.lat) * std::cos(p.lat * kDeg);
    for (const auto& poly : geometry.land) {
        if (poly.contains(p)) return std::make_pair(p, 0.0);
        const auto& ring = poly.ring();
        for (std::size_t i = 0; i < ring.size(); ++i) {
            const Eigen::Vector2d a = enu_offset(p, ring[i]);
            const Eigen::Vector2d b = enu_offset(p, ring[(i + 1) % ring.size()]);
            const Eigen::Vector2d ab = b - a;
            const double len2 = ab.squaredNorm();
            const double t = len2 > 0 ? std::clamp(-a.dot(ab) / len2, 0.0, 1.0) : 0.0;
            const Eigen::Vector2d q = a + t * ab;
            const double d = q.norm();
            if (!best || d < best->second)
                best = std::make_pair(LatLon{p.lat + q.y() / m / kDeg, p.lon + q.x() / n / kDeg}, d);
        }
    }
    return best;
}

void label_and_rank(Detection& det, const GridSpec& spec, const Geometry& geometry, const LabelInputs& in) {
    const std::size_t K = det.areas.size();
    auto area_of = [&](const LatLon& p) -> int {
        int r, c;
        if (!spec.locate(p, r, c)) return 0;
        return det.labels[spec.index(r, c)];
    };
    std::vector<std::map<std::string, std::size_t>> dest(K);
    std::vector<std::array<std::size_t, kCategoryCount>> cats(K);
    std::vector<std::size_t> unknown(K, 0);
    for (auto& a : det.areas) {
        a.arrivals = 0;
        a.occupancy = 0;
    }
    for (const auto& ar : in.arrivals) {
        const int l = area_of(ar.pos);
        if (!l) continue;
        BerthArea& a = det.areas[l - 1];
        ++a.arrivals;
        if (auto it = in.destinations.find(ar.mmsi); it != in.destinations.end()) {
            const std::string* latest = nullptr;
            for (const auto& [t, d] : it->second) {
                if (t > ar.t) break;
                if (!d.empty()) latest = &d;
            }
            if (latest) ++dest[l - 1][*latest];
        }
        auto pit = in.profiles.find(ar.mmsi);
        if (pit != in.profiles.end() && pit->second.type_known)
            ++cats[l - 1][static_cast<int>(pit->second.category)];
        else
            ++unknown[l - 1];
    }
    for (const auto& s : in.stationary) {
        if (!(s.drift_m <= kMaxDrift)) continue;
        if (const int l = area_of(s.anchor)) det.areas[l - 1].occupancy += s.duration_s;
    }
    const double days = in.window_s / static_cast<double>(kDay);
    for (std::size_t k = 0; k < K; ++k) {
        BerthArea& a = det.areas[k];
        a.occupancy = in.window_s > 0 ? a.occupancy / in.window_s : 0.0;
        a.arrivals_per_day = days > 0 ? static_cast<double>(a.arrivals) / days : 0.0;
        std::size_t best = 0;
        for (const auto& [d, n] : dest[k])
            if (n > best) {
                best = n;
                a.dominant_destination = d;
            }
        std::size_t typed = 0, top = 0;
        int top_cat = -1;
        for (int c = 0; c < kCategoryCount; ++c) {
            typed += cats[k][c];
            if (cats[k][c] > top) {
                top = cats[k][c];
                top_cat = c;
            }
        }
        const double total = static_cast<double>(typed + unknown[k]);
        if (top_cat >= 0 && total > 0) {
            a.dominant_category = static_cast<Category>(top_cat);
            a.category_share_min = static_cast<double>(top) / total;
            a.category_share_max = static_cast<double>(top + unknown[k]) / total;
        }
        if (auto s = nearest_shore(geometry, a.centroid)) {
            a.shore_point = s->first;
            a.shore_distance_m = s->second;
            a.is_berth = s->second <= in.berth_shore_m;
        }
    }
}

void write_esri_ascii(std::ostream& out, const Field2D& f, const GridSpec& spec, double nodata) {
    char buf[64];
    out << "ncols " << f.cols << "\nnrows " << f.rows << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", spec.lon0);
    out << "xllcorner " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", spec.lat0);
    out << "yllcorner " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", spec.cell_deg);
    out << "cellsize " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.6g", nodata);
    out << "NODATA_value " << buf << "\n";
    for (int r = f.rows - 1; r >= 0; --r) {
        for (int c = 0; c < f.cols; ++c) {
            const double x = f.at(r, c);
            std::snprintf(buf, sizeof buf, "%.9g", std::isnan(x) ? nodata : x);
            out << (c ? " " : "") << buf;
        }
        out << "\n";
    }
}

Field2D read_esri_ascii(std::istream& in, GridSpec& spec) {
    std::map<std::string, double> header;
    for (int i = 0; i < 6; ++i) {
        std::string key;
        double v;
        if (!(in >> key >> v)) throw std::invalid_argument("esri ascii: truncated header");
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        header[key] = v;
    }
    for (const char* k : {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"})
        if (!header.count(k)) throw std::invalid_argument(std::string("esri ascii: missing ") + k);
    spec.cols = static_cast<int>(header["ncols"]);
    spec.rows = static_cast<int>(header["nrows"]);
    spec.lon0 = header["xllcorner"];
    spec.lat0 = header["yllcorner"];
    spec.cell_deg = header["cellsize"];
    const double nodata = header["nodata_value"];
    Field2D f(spec.rows, spec.cols);
    for (int r = spec.rows - 1; r >= 0; --r)
        for (int c = 0; c < spec.cols; ++c) {
            double v;
            if (!(in >> v)) throw std::invalid_argument("esri ascii: truncated data");
            f.at(r, c) = v == nodata ? std::nan("") : v;
        }
    return f;
}

void write_cells_csv(std::ostream& out, const Field2D& f, const GridSpec& spec) {
    out << "row,col,lat,lon,value\n";
    char buf[160];
    for (int r = 0; r < f.rows; ++r)
        for (int c = 0; c < f.cols; ++c) {
            const double x = f.at(r, c);
            if (std::isnan(x) || x == 0) continue;
            std::snprintf(buf, sizeof buf, "%d,%d,%.7f,%.7f,%.9g\n", r, c, spec.row_lat(r), spec.col_lon(c), x);
            out << buf;
        }
}

void write_berths_csv(std::ostream& out, const std::vector<BerthArea>& areas) {
    out << "id,lat,lon,area_km2,kind,shore_distance_m,arrivals_per_day,vessels_in_berth,destination,category,"
           "category_share_min,category_share_max\n";
    char buf[512];
    for (const auto& a : areas) {
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%s,%.1f,%.4f,%.4f,%s,%s,%.4f,%.4f\n", a.id, a.centroid.lat,
                      a.centroid.lon, a.area_km2, a.is_berth ? "berth" : "offshore", a.shore_distance_m,
                      a.arrivals_per_day, a.occupancy, a.dominant_destination.c_str(),
                      a.dominant_category ? category_name(*a.dominant_category) : "", a.category_share_min,
                      a.category_share_max);
        out << buf;
    }
}

}  // namespace aisbay

#pragma once

#include "aisbay/areas.hpp"
#include "aisbay/classify.hpp"
#include "aisbay/ingest.hpp"
#include "aisbay/trajectory.hpp"

#include <map>
#include <optional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace aisbay {

// Regular lat/lon grid; row 0 is the southernmost row.
struct GridSpec {
    double lat0 = 0, lon0 = 0;        // south-west corner, degrees
    double cell_deg = 1.0 / 3600.0;   // one arc-second
    int rows = 0, cols = 0;

    static GridSpec from_bbox(double lat_min, double lat_max, double lon_min, double lon_max,
                              double cell_arcsec = 1.0);
    double row_lat(int row) const { return lat0 + (row + 0.5) * cell_deg; }
    double col_lon(int col) const { return lon0 + (col + 0.5) * cell_deg; }
    double cell_height_m(int row) const;
    double cell_width_m(int row) const;
    double cell_area_km2(int row) const;
    bool locate(const LatLon& p, int& row, int& col) const;
    std::size_t index(int row, int col) const { return static_cast<std::size_t>(row) * cols + col; }
    std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

struct Field2D {
    int rows = 0, cols = 0;
    std::vector<double> v;
    Field2D() = default;
    Field2D(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}
    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    double sum() const;
};

struct StationaryDeposit {
    Mmsi mmsi = 0;
    LatLon anchor;
    double duration_s = 0;
    double drift_m = 0;
};

inline constexpr double kMaxDrift = 500.0;  // metres

// One deposit per Moored gap: anchored at the centroid of the stationary periods inside it,
// or at the midpoint of the enclosing leg endpoints when it holds none.
std::vector<StationaryDeposit> stationary_deposits(const VesselTimeline& tl, const std::vector<GapClassification>& gaps);

struct GridRaster {
    GridSpec spec;
    double window_s = 0;
    Field2D occupancy;   // vessel-seconds
    Field2D speed_sum;   // knots x seconds, moving samples only
    Field2D moving_time; // seconds, moving samples only
    Field2D course_x;    // sum of dwell * sin(course)
    Field2D course_y;    // sum of dwell * cos(course)
    double deposited_s = 0;
    double land_s = 0;
    double clipped_s = 0;
    double excluded_stationary_s = 0;
    std::size_t excluded_stationary = 0;

    explicit GridRaster(const GridSpec& s = {}, double window = 0);
    void merge(const GridRaster& other);
    Field2D density() const;      // time-averaged vessels per cell
    Field2D density_km2() const;  // vessels per km^2
    Field2D mean_speed() const;   // knots, NaN where no moving samples
    Field2D resultant() const;    // course resultant length, NaN where empty
};

struct AccumulateOptions {
    double spacing_m = 10.0;
    double max_drift_m = kMaxDrift;
};

GridRaster accumulate(const std::vector<Trajectory>& trajectories, const std::vector<StationaryDeposit>& stationary,
                      const GridSpec& spec, const Geometry& geometry, double window_s, const AccumulateOptions& opt = {},
                      unsigned threads = 1);

inline constexpr double kSmoothSigma = 1.5;
Field2D smooth(const Field2D& in, double sigma_cells = kSmoothSigma);

struct BerthArea {
    int id = 0;
    std::vector<std::pair<int, int>> cells;  // (row, col)
    LatLon centroid;
    double area_km2 = 0;
    double peak = 0;
    // filled by label_and_rank
    std::optional<LatLon> shore_point;
    double shore_distance_m = -1;
    bool is_berth = false;
    double arrivals_per_day = 0;
    std::size_t arrivals = 0;
    double occupancy = 0;  // time-averaged vessels
    std::string dominant_destination;
    std::optional<Category> dominant_category;
    double category_share_min = 0;
    double category_share_max = 0;
};

inline constexpr double kSeedThreshold = 10.0;     // vessels / km^2
inline constexpr double kSupportThreshold = 5.0;

struct Detection {
    std::vector<BerthArea> areas;
    std::vector<int> labels;  // per cell: 0 = none, else area id
};

Detection detect_berths(const Field2D& density_km2, const GridSpec& spec, double seed_threshold = kSeedThreshold,
                        double support_threshold = kSupportThreshold);

struct ArrivalRecord {
    Mmsi mmsi = 0;
    Seconds t = 0;
    LatLon pos;
};

struct LabelInputs {
    std::vector<ArrivalRecord> arrivals;             // leg ends
    std::vector<StationaryDeposit> stationary;
    std::map<Mmsi, VesselProfile> profiles;
    std::map<Mmsi, std::vector<std::pair<Seconds, std::string>>> destinations;  // time-ordered static destinations
    double window_s = 0;
    double berth_shore_m = 200.0;
};

void label_and_rank(Detection& det, const GridSpec& spec, const Geometry& geometry, const LabelInputs& in);

// Closest point on any land polygon edge (local planar metres around p).
std::optional<std::pair<LatLon, double>> nearest_shore(const Geometry& geometry, const LatLon& p);

void write_esri_ascii(std::ostream& out, const Field2D& f, const GridSpec& spec, double nodata = -9999.0);
// Reads a raster written by write_esri_ascii; nodata cells become NaN.
Field2D read_esri_ascii(std::istream& in, GridSpec& spec);
void write_cells_csv(std::ostream& out, const Field2D& f, const GridSpec& spec);
void write_berths_csv(std::ostream& out, const std::vector<BerthArea>& areas);

}  // namespace aisbay

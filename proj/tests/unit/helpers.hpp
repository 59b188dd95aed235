#pragma once

#include "aisbay/geo.hpp"
#include "aisbay/message.hpp"

#include <cmath>

namespace testutil {

using namespace aisbay;

inline AisMessage pos(Mmsi mmsi, Seconds t, LatLon p, double sog = 10.0) {
    AisMessage m;
    m.mmsi = mmsi;
    m.t = t;
    m.lat = p.lat;
    m.lon = p.lon;
    m.sog = sog;
    m.kind = ReportKind::Position;
    m.nav_status = 0;
    return m;
}

inline AisMessage stat(Mmsi mmsi, Seconds t, int type = 70, std::string dest = "") {
    AisMessage m;
    m.mmsi = mmsi;
    m.t = t;
    m.lat = std::nan("");
    m.lon = std::nan("");
    m.kind = ReportKind::Static;
    m.ship_type = type;
    m.destination = std::move(dest);
    return m;
}

// Straight-line track at constant speed along a bearing, one message per `dt`.
inline std::vector<AisMessage> track(Mmsi mmsi, Seconds t0, LatLon start, double bearing, double kn, int n, Seconds dt = 60) {
    std::vector<AisMessage> out;
    for (int i = 0; i < n; ++i) {
        const double d = kn * kKnot * static_cast<double>(i * dt);
        out.push_back(pos(mmsi, t0 + i * dt, destination(start, bearing, d), kn));
    }
    return out;
}

// Independent ellipsoidal inverse (Vincenty) used as an oracle for the Boost-backed distance.
inline double vincenty(LatLon p, LatLon q) {
    const double a = kWgs84A, f = kWgs84F, b = a * (1 - f);
    const double L = (q.lon - p.lon) * kDeg;
    const double U1 = std::atan((1 - f) * std::tan(p.lat * kDeg)), U2 = std::atan((1 - f) * std::tan(q.lat * kDeg));
    const double sU1 = std::sin(U1), cU1 = std::cos(U1), sU2 = std::sin(U2), cU2 = std::cos(U2);
    double lam = L, lamP, sS, cS, sig, ca2, c2m;
    int it = 0;
    do {
        const double sl = std::sin(lam), cl = std::cos(lam);
        sS = std::sqrt((cU2 * sl) * (cU2 * sl) + (cU1 * sU2 - sU1 * cU2 * cl) * (cU1 * sU2 - sU1 * cU2 * cl));
        if (sS == 0) return 0;
        cS = sU1 * sU2 + cU1 * cU2 * cl;
        sig = std::atan2(sS, cS);
        const double sa = cU1 * cU2 * sl / sS;
        ca2 = 1 - sa * sa;
        c2m = ca2 != 0 ? cS - 2 * sU1 * sU2 / ca2 : 0;
        const double C = f / 16 * ca2 * (4 + f * (4 - 3 * ca2));
        lamP = lam;
        lam = L + (1 - C) * f * sa * (sig + C * sS * (c2m + C * cS * (-1 + 2 * c2m * c2m)));
    } while (std::abs(lam - lamP) > 1e-13 && ++it < 200);
    const double u2 = ca2 * (a * a - b * b) / (b * b);
    const double A = 1 + u2 / 16384 * (4096 + u2 * (-768 + u2 * (320 - 175 * u2)));
    const double B = u2 / 1024 * (256 + u2 * (-128 + u2 * (74 - 47 * u2)));
    const double ds = B * sS * (c2m + B / 4 * (cS * (-1 + 2 * c2m * c2m) - B / 6 * c2m * (-3 + 4 * sS * sS) * (-3 + 4 * c2m * c2m)));
    return b * A * (sig - ds);
}

}  // namespace testutil

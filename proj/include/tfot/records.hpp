#pragma once

#include "tfot/core.hpp"
#include "tfot/lifecycle.hpp"
#include "tfot/simulator.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace tfot {

/// Malformed CSV input.
class CsvError : public Error {
public:
    using Error::Error;
};

/// One scan of one Monte Carlo run.
struct RunRecord {
    int run_id = 0;
    ScanIndex k = 0;
    std::optional<Position2> truth;
    std::optional<Position2> estimate;
    double ospa = 0.0;
    TrackEvent event = TrackEvent::none;
    std::int64_t step_micros = 0;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

inline constexpr std::string_view kRunRecordHeader =
    "run_id,k,truth_alive,truth_x,truth_y,est_present,est_x,est_y,ospa,event,step_micros";

namespace detail {

// Locale-independent shortest-round-trip formatting with a fixed number of
// significant digits.
inline std::string format_double(double v, int digits) {
    char buf[64];
    const int n = std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return std::string(buf, static_cast<std::size_t>(n));
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim_cr(std::string_view s) {
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

inline double parse_double(std::string_view s, std::size_t line) {
    // strtod honours the C locale, which the library never changes
    const std::string tmp(s);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size())
        throw CsvError("line " + std::to_string(line) + ": bad number '" + tmp + "'");
    return v;
}

template <typename Int>
Int parse_int(std::string_view s, std::size_t line) {
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw CsvError("line " + std::to_string(line) + ": bad integer '" + std::string(s) + "'");
    return v;
}

inline TrackEvent parse_event(std::string_view s, std::size_t line) {
    if (s == "none") return TrackEvent::none;
    if (s == "confirmed") return TrackEvent::confirmed;
    if (s == "terminated") return TrackEvent::terminated;
    if (s == "missed") return TrackEvent::missed;
    throw CsvError("line " + std::to_string(line) + ": unknown event '" + std::string(s) + "'");
}

inline bool parse_flag(std::string_view s, std::size_t line) {
    if (s == "1") return true;
    if (s == "0") return false;
    throw CsvError("line " + std::to_string(line) + ": expected 0 or 1");
}

}  // namespace detail

/// Writes the header and one row per record. Reals carry 9 significant digits.
inline void write_csv(std::ostream& out, std::span<const RunRecord> records) {
    using detail::format_double;
    out << kRunRecordHeader << '\n';
    for (const auto& r : records) {
        out << r.run_id << ',' << r.k << ',';
        if (r.truth)
            out << "1," << format_double(r.truth->x, 9) << ',' << format_double(r.truth->y, 9) << ',';
        else
            out << "0,,,";
        if (r.estimate)
            out << "1," << format_double(r.estimate->x, 9) << ',' << format_double(r.estimate->y, 9) << ',';
        else
            out << "0,,,";
        out << format_double(r.ospa, 9) << ',' << to_string(r.event) << ',' << r.step_micros << '\n';
    }
}

[[nodiscard]] inline std::vector<RunRecord> read_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line) || detail::trim_cr(line) != kRunRecordHeader)
        throw CsvError("line 1: missing or unexpected run-record header");
    std::vector<RunRecord> out;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = detail::trim_cr(line);
        if (text.empty()) continue;
        const auto f = detail::split(text);
        if (f.size() != 11) throw CsvError("line " + std::to_string(lineno) + ": expected 11 fields");
        RunRecord r;
        r.run_id = detail::parse_int<int>(f[0], lineno);
        r.k = detail::parse_int<ScanIndex>(f[1], lineno);
        if (detail::parse_flag(f[2], lineno))
            r.truth = Position2{detail::parse_double(f[3], lineno), detail::parse_double(f[4], lineno)};
        else if (!f[3].empty() || !f[4].empty())
            throw CsvError("line " + std::to_string(lineno) + ": truth fields set while truth_alive=0");
        if (detail::parse_flag(f[5], lineno))
            r.estimate = Position2{detail::parse_double(f[6], lineno), detail::parse_double(f[7], lineno)};
        else if (!f[6].empty() || !f[7].empty())
            throw CsvError("line " + std::to_string(lineno) + ": estimate fields set while est_present=0");
        r.ospa = detail::parse_double(f[8], lineno);
        r.event = detail::parse_event(f[9], lineno);
        r.step_micros = detail::parse_int<std::int64_t>(f[10], lineno);
        out.push_back(r);
    }
    return out;
}

// ---- Scenario files ----
//
// One scenario per file:
//   # tfot scenario v1
//   row,k,x,y,vx,vy,omega,cxx,cxy,cyy
//   scan,<k>,,,,,,,,            one per scan, in order
//   truth,<k>,x,y,vx,vy,[omega],,,
//   meas,<k>,x,y,,,,cxx,cxy,cyy  one per measurement, frame order preserved
// Reals are written with 17 significant digits so a round trip is exact.

inline constexpr std::string_view kScenarioMagic = "# tfot scenario v1";
inline constexpr std::string_view kScenarioHeader = "row,k,x,y,vx,vy,omega,cxx,cxy,cyy";

inline void write_scenario(std::ostream& out, const Scenario& sc) {
    using detail::format_double;
    auto d = [](double v) { return format_double(v, 17); };
    out << kScenarioMagic << '\n' << kScenarioHeader << '\n';
    for (const auto& f : sc.frames) {
        out << "scan," << f.k << ",,,,,,,,\n";
        if (f.k >= 1 && f.k <= sc.truth.duration())
            if (const auto& t = sc.truth.at(f.k))
                out << "truth," << f.k << ',' << d(t->position.x) << ',' << d(t->position.y) << ','
                    << d(t->velocity.x) << ',' << d(t->velocity.y) << ','
                    << (t->turn_rate ? d(*t->turn_rate) : std::string()) << ",,,\n";
        for (std::size_t i = 0; i < f.size(); ++i) {
            const Cov2& c = f.cov(i);
            out << "meas," << f.k << ',' << d(f.points[i].x) << ',' << d(f.points[i].y) << ",,,," << d(c.xx) << ','
                << d(c.xy) << ',' << d(c.yy) << '\n';
        }
    }
}

[[nodiscard]] inline Scenario read_scenario(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || detail::trim_cr(line) != kScenarioMagic)
        throw CsvError("line 1: not a tfot scenario file");
    if (!std::getline(in, line) || detail::trim_cr(line) != kScenarioHeader)
        throw CsvError("line 2: unexpected scenario header");
    Scenario sc;
    std::size_t lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = detail::trim_cr(line);
        if (text.empty()) continue;
        const auto f = detail::split(text);
        if (f.size() != 10) throw CsvError("line " + std::to_string(lineno) + ": expected 10 fields");
        const auto k = detail::parse_int<ScanIndex>(f[1], lineno);
        if (f[0] == "scan") {
            if (k != static_cast<ScanIndex>(sc.frames.size()) + 1)
                throw CsvError("line " + std::to_string(lineno) + ": scans must run 1, 2, 3, ...");
            sc.frames.push_back(MeasurementFrame{k, {}, {}});
            sc.truth.states.emplace_back();
            continue;
        }
        if (sc.frames.empty() || sc.frames.back().k != k)
            throw CsvError("line " + std::to_string(lineno) + ": row does not belong to the current scan");
        if (f[0] == "truth") {
            TruthState t;
            t.position = {detail::parse_double(f[2], lineno), detail::parse_double(f[3], lineno)};
            t.velocity = {detail::parse_double(f[4], lineno), detail::parse_double(f[5], lineno)};
            if (!f[6].empty()) t.turn_rate = detail::parse_double(f[6], lineno);
            sc.truth.states.back() = t;
        } else if (f[0] == "meas") {
            auto& frame = sc.frames.back();
            frame.points.push_back({detail::parse_double(f[2], lineno), detail::parse_double(f[3], lineno)});
            const double xy = detail::parse_double(f[8], lineno);
            frame.covs.push_back(
                Cov2::symmetric(detail::parse_double(f[7], lineno), xy, detail::parse_double(f[9], lineno)));
        } else {
            throw CsvError("line " + std::to_string(lineno) + ": unknown row kind '" + std::string(f[0]) + "'");
        }
    }
    return sc;
}

}  // namespace tfot

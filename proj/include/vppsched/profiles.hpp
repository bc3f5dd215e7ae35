#ifndef VPPSCHED_PROFILES_HPP
#define VPPSCHED_PROFILES_HPP

// Time series inputs: CSV ingestion and seeded synthetic generators.
//
// Synthetic shapes, with t the interval-centre hour of day and eps ~ N(0,1)
// drawn independently per interval:
//
//   household  (0.15 + 0.8 g(t; 7.5, 1) + 1.4 g(t; 19, 1.5)) (1 + noise eps)
//   industry   (40 + 80 s(t) + 60 g(t; 10, 0.5) + 40 g(t; 14, 0.75)) (1 + noise eps)
//              where s is a logistic plateau from 6:00 to 18:00
//   spp        peak max(0, sin(pi (t - 6) / 12)) max(0, 1 + noise eps)
//   prices     day_price from 8:00 to 20:00, night_price otherwise, plus
//              noise night_price eps jitter, floored at zero
//
// g(t; m, s) = exp(-(t - m)^2 / (2 s^2)). Every shape is multiplied by
// `scale`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"
#include "storage.hpp"

namespace vppsched {

enum class ProfileKind : std::uint8_t { household, industry, spp, market_prices, flat };

inline constexpr std::string_view to_string(ProfileKind k)
{
    switch (k) {
    case ProfileKind::household: return "household";
    case ProfileKind::industry: return "industry";
    case ProfileKind::spp: return "spp";
    case ProfileKind::market_prices: return "market_prices";
    case ProfileKind::flat: return "flat";
    }
    return "?";
}

inline ProfileKind profile_kind_from_string(std::string_view name)
{
    for (auto k : {ProfileKind::household, ProfileKind::industry, ProfileKind::spp, ProfileKind::market_prices,
                   ProfileKind::flat})
        if (to_string(k) == name)
            return k;
    throw ConfigError("unknown profile kind '" + std::string(name) + "'");
}

struct SyntheticSpec {
    ProfileKind kind = ProfileKind::household;
    std::uint64_t seed = 0;
    double scale = 1.0;
    double noise = 0.05;
    double day_price = 0.08;   // market_prices: day level per kWh
    double night_price = 0.04; // market_prices: night level per kWh
    friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

namespace detail {

    inline double bump(double t, double mean, double sd)
    {
        const double z = (t - mean) / sd;
        return std::exp(-0.5 * z * z);
    }

    inline double plateau(double t, double start, double end, double edge)
    {
        return 1.0 / (1.0 + std::exp(-(t - start) / edge)) * 1.0 / (1.0 + std::exp((t - end) / edge));
    }

    inline double hour_of_day(int i, const IntervalSpec& spec)
    {
        return std::fmod((i + 0.5) * spec.hours(), 24.0);
    }

} // namespace detail

inline std::vector<double> generate_profile(const SyntheticSpec& s, const IntervalSpec& spec)
{
    spec.check();
    if (!(s.scale >= 0.0) || !(s.noise >= 0.0))
        throw ConfigError("synthetic profile: scale and noise must be non-negative");
    Rng rng(derive_seed(s.seed, static_cast<std::uint64_t>(s.kind)));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(spec.n_intervals));
    for (int i = 0; i < spec.n_intervals; ++i) {
        const double t = detail::hour_of_day(i, spec);
        const double eps = normal(rng);
        double v = 0.0;
        switch (s.kind) {
        case ProfileKind::household:
            v = (0.15 + 0.8 * detail::bump(t, 7.5, 1.0) + 1.4 * detail::bump(t, 19.0, 1.5)) * (1.0 + s.noise * eps);
            v = std::max(v, 0.0);
            break;
        case ProfileKind::industry:
            v = (40.0 + 80.0 * detail::plateau(t, 6.0, 18.0, 0.5) + 60.0 * detail::bump(t, 10.0, 0.5)
                 + 40.0 * detail::bump(t, 14.0, 0.75))
                * (1.0 + s.noise * eps);
            v = std::max(v, 0.0);
            break;
        case ProfileKind::spp:
            v = std::max(0.0, std::sin(std::numbers::pi * (t - 6.0) / 12.0)) * std::max(0.0, 1.0 + s.noise * eps);
            if (t < 6.0 || t > 18.0)
                v = 0.0;
            break;
        case ProfileKind::market_prices: {
            const bool day = t >= 8.0 && t < 20.0;
            v = std::max(0.0, (day ? s.day_price : s.night_price) + s.noise * s.night_price * eps);
            break;
        }
        case ProfileKind::flat:
            v = 1.0;
            break;
        }
        out.push_back(v * s.scale);
    }
    return out;
}

/// Energy of a power profile in kWh.
inline double profile_energy_kwh(const std::vector<double>& power_kw, const IntervalSpec& spec)
{
    double e = 0.0;
    for (double p : power_kw)
        e += p * spec.hours();
    return e;
}

/// CSV with a header row and columns (interval_index, value). Rows must be
/// numbered 0..n-1 in order.
inline std::vector<double> parse_profile_csv(std::string_view text, int n_intervals, std::string_view origin = "csv")
{
    std::istringstream in{std::string(text)};
    std::string line;
    const std::string where(origin);
    if (!std::getline(in, line))
        throw ConfigError(where + ": empty profile file");
    std::vector<double> values;
    int row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ConfigError(where + ": row " + std::to_string(row) + " needs two columns");
        std::size_t used = 0;
        long index = 0;
        double value = 0.0;
        try {
            const std::string idx_text = line.substr(0, comma);
            index = std::stol(idx_text, &used);
            if (used != idx_text.size())
                throw std::invalid_argument("index");
            const std::string val_text = line.substr(comma + 1);
            value = std::stod(val_text, &used);
            if (used != val_text.size() || !std::isfinite(value))
                throw std::invalid_argument("value");
        } catch (const std::logic_error&) {
            throw ConfigError(where + ": non-numeric cell in row " + std::to_string(row));
        }
        if (index != row)
            throw ConfigError(where + ": expected interval index " + std::to_string(row));
        values.push_back(value);
        ++row;
    }
    if (static_cast<int>(values.size()) != n_intervals)
        throw ConfigError(where + ": profile has " + std::to_string(values.size()) + " rows, horizon is "
                          + std::to_string(n_intervals));
    return values;
}

inline std::vector<double> load_profile_csv(const std::string& path, int n_intervals)
{
    std::ifstream f(path);
    if (!f)
        throw ConfigError("cannot open profile '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_profile_csv(ss.str(), n_intervals, path);
}

inline std::string profile_to_csv(const std::vector<double>& values)
{
    std::ostringstream out;
    out.precision(17);
    out << "interval_index,value\n";
    for (std::size_t i = 0; i < values.size(); ++i)
        out << i << ',' << values[i] << '\n';
    return out.str();
}

/// Generator profiles feed coupling constraints and must not be negative.
inline void check_generator_profile(const std::vector<double>& values, std::string_view what)
{
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!(values[i] >= 0.0))
            throw ConfigError(std::string(what) + ": negative generator output at interval " + std::to_string(i));
}

} // namespace vppsched

#endif

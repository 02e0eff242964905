#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace west {

/// Seeded RNG with hand-rolled float conversions so that identical seeds give
/// identical streams on every platform (std distributions are not portable).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53 random mantissa bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n);

    /// Exponential with the given rate (mean 1/rate).
    double exponential(double rate);

    /// Index sampled proportionally to nonnegative weights (CDF walk).
    std::size_t weighted_choice(std::span<const double> weights);

private:
    std::mt19937_64 gen_;
};

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

/// Fixed 17-significant-digit decimal (adjacency CSV contract).
std::string format_double_17(double v);

double parse_double(const std::string& s);

std::uint64_t fnv1a_init();
void fnv1a_append(std::uint64_t& h, const void* data, std::size_t len);
void fnv1a_append_u64(std::uint64_t& h, std::uint64_t v);
void fnv1a_append_double(std::uint64_t& h, double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Splits one CSV line on commas (no quoting; the file formats here never quote).
std::vector<std::string> split_csv_line(const std::string& line);

} // namespace west

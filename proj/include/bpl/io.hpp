// io.hpp: locale-independent round-trip number formatting and CSV tables

#pragma once

#include <charconv>
#include <complex>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace bpl::io {

inline constexpr std::string_view kFormatTag = "# branchpoint-lab v1";

// Shortest decimal that parses back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    if (res.ec != std::errc{}) return "nan";
    return std::string(buf, res.ptr);
}

class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::vector<std::string_view>& columns) : os_(os) {
        os_ << kFormatTag << '\n';
        bool first = true;
        for (auto c : columns) {
            if (!first) os_ << ',';
            os_ << c;
            first = false;
        }
        os_ << '\n';
    }

    CsvWriter& field(double x) { return raw(format_double(x)); }
    CsvWriter& field(std::complex<double> z) { return field(z.real()).field(z.imag()); }
    CsvWriter& field(long long n) { return raw(std::to_string(n)); }
    CsvWriter& field(std::string_view s) { return raw(s); }

    void end_row() {
        os_ << '\n';
        first_ = true;
        ++rows_;
    }

    std::size_t rows() const noexcept { return rows_; }

private:
    CsvWriter& raw(std::string_view s) {
        if (!first_) os_ << ',';
        os_ << s;
        first_ = false;
        return *this;
    }

    std::ostream& os_;
    bool first_ = true;
    std::size_t rows_ = 0;
};

} // namespace bpl::io

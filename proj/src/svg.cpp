#include "imbl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace imbl {
namespace svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kPad = 48.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct Range {
    double lo, hi;
    double map(double v, double out_lo, double out_hi) const {
        const double span = hi - lo;
        const double t = span > 0.0 ? (v - lo) / span : 0.5;
        return out_lo + t * (out_hi - out_lo);
    }
};

Range padded_range(double lo, double hi) {
    if (lo == hi) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

} // namespace

std::string scatter(const Matrix& xy, const std::vector<int>& cls,
                    const std::vector<bool>& synthetic, const std::string& title) {
    if (xy.cols() != 2) throw std::invalid_argument("svg scatter: need exactly 2 feature columns");
    if (cls.size() != xy.rows() || synthetic.size() != xy.rows()) {
        throw std::invalid_argument("svg scatter: class/origin vectors do not match points");
    }
    double xlo = xy(0, 0), xhi = xy(0, 0), ylo = xy(0, 1), yhi = xy(0, 1);
    for (std::size_t i = 0; i < xy.rows(); ++i) {
        xlo = std::min(xlo, xy(i, 0));
        xhi = std::max(xhi, xy(i, 0));
        ylo = std::min(ylo, xy(i, 1));
        yhi = std::max(yhi, xy(i, 1));
    }
    const Range rx = padded_range(xlo, xhi);
    const Range ry = padded_range(ylo, yhi);

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";

    for (std::size_t i = 0; i < xy.rows(); ++i) {
        const double px = rx.map(xy(i, 0), kPad, kWidth - kPad);
        const double py = ry.map(xy(i, 1), kHeight - kPad, kPad);
        const char* color = cls[i] == 1 ? "#c0392b" : "#2c6fbb";
        if (synthetic[i]) {
            const double r = 3.2;
            out << "<path class=\"pt synthetic\" stroke=\"" << color
                << "\" stroke-width=\"1.4\" d=\"M" << num(px - r) << ' ' << num(py - r) << " L"
                << num(px + r) << ' ' << num(py + r) << " M" << num(px - r) << ' ' << num(py + r)
                << " L" << num(px + r) << ' ' << num(py - r) << "\"/>\n";
        } else {
            out << "<circle class=\"pt real\" cx=\"" << num(px) << "\" cy=\"" << num(py)
                << "\" r=\"3\" fill=\"" << color << "\" fill-opacity=\"0.75\"/>\n";
        }
    }

    // legend drawn with rects so point elements stay countable
    out << "<g class=\"legend\" font-size=\"12\">"
        << "<rect x=\"" << kWidth - 150 << "\" y=\"40\" width=\"10\" height=\"10\" fill=\"#2c6fbb\"/>"
        << "<text x=\"" << kWidth - 134 << "\" y=\"50\">negative</text>"
        << "<rect x=\"" << kWidth - 150 << "\" y=\"58\" width=\"10\" height=\"10\" fill=\"#c0392b\"/>"
        << "<text x=\"" << kWidth - 134 << "\" y=\"68\">positive</text>"
        << "</g>\n";
    out << "</svg>\n";
    return out.str();
}

std::string lines(const Vector& x, const std::vector<LineSeries>& series,
                  const std::string& x_label, const std::string& y_label,
                  const std::string& title) {
    if (x.empty()) throw std::invalid_argument("svg lines: no x positions");
    for (const auto& s : series) {
        if (s.y.size() != x.size()) {
            throw std::invalid_argument("svg lines: series '" + s.label +
                                        "' does not match the x grid");
        }
    }
    double ylo = 0.0, yhi = 0.0;
    bool first = true;
    for (const auto& s : series) {
        for (double v : s.y) {
            ylo = first ? v : std::min(ylo, v);
            yhi = first ? v : std::max(yhi, v);
            first = false;
        }
    }
    if (first) throw std::invalid_argument("svg lines: no series");
    const Range rx = padded_range(x.front(), x.back());
    const Range ry = padded_range(ylo, yhi);

    static const char* kPalette[] = {"#2c6fbb", "#c0392b", "#27884a", "#8e44ad", "#d68910"};

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";
    out << "<line x1=\"" << kPad << "\" y1=\"" << kHeight - kPad << "\" x2=\"" << kWidth - kPad
        << "\" y2=\"" << kHeight - kPad << "\" stroke=\"#444\"/>\n";
    out << "<line x1=\"" << kPad << "\" y1=\"" << kHeight - kPad << "\" x2=\"" << kPad
        << "\" y2=\"" << kPad << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10
        << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
    out << "<text x=\"14\" y=\"" << kHeight / 2 << "\" font-size=\"13\" transform=\"rotate(-90 14 "
        << kHeight / 2 << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";

    for (double xv : x) {
        const double px = rx.map(xv, kPad, kWidth - kPad);
        out << "<g class=\"xtick\"><line x1=\"" << num(px) << "\" y1=\"" << kHeight - kPad
            << "\" x2=\"" << num(px) << "\" y2=\"" << kHeight - kPad + 6
            << "\" stroke=\"#444\"/><text x=\"" << num(px) << "\" y=\"" << kHeight - kPad + 20
            << "\" text-anchor=\"middle\" font-size=\"11\">" << xv << "</text></g>\n";
    }

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % 5];
        out << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < x.size(); ++i) {
            out << num(rx.map(x[i], kPad, kWidth - kPad)) << ','
                << num(ry.map(series[s].y[i], kHeight - kPad, kPad)) << ' ';
        }
        out << "\"/>\n";
        out << "<text x=\"" << kWidth - 140 << "\" y=\"" << 44 + 16 * s << "\" font-size=\"12\" fill=\""
            << color << "\">" << series[s].label << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

} // namespace svg
} // namespace imbl

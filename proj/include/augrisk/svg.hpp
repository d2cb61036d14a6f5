// Copyright (c) 2026 augrisk contributors
// Licensed under the Apache License, Version 2.0.

/// Minimal SVG 1.1 line-plot emitter. CSV files remain the source of truth;
/// these plots exist for quick visual inspection of training curves.

#pragma once

#include "augrisk/io.hpp"

namespace augrisk {

class LinePlot {
public:
    LinePlot(std::string title, std::string x_label, std::string y_label)
        : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

    void add_series(const std::string& name, const std::vector<std::pair<double, double>>& pts) {
        series_.emplace_back(name, pts);
    }

    std::string str() const {
        const double w = 640, h = 420;
        const double left = 60, right = 20, top = 40, bottom = 50;
        double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
        bool first = true;
        for (const auto& [name, pts] : series_) {
            for (const auto& [x, y] : pts) {
                if (!std::isfinite(x) || !std::isfinite(y)) continue;
                if (first) {
                    x_min = x_max = x;
                    y_min = y_max = y;
                    first = false;
                } else {
                    x_min = std::min(x_min, x);
                    x_max = std::max(x_max, x);
                    y_min = std::min(y_min, y);
                    y_max = std::max(y_max, y);
                }
            }
        }
        if (x_max == x_min) x_max = x_min + 1;
        if (y_max == y_min) y_max = y_min + 1;
        auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * (w - left - right); };
        auto py = [&](double y) { return h - bottom - (y - y_min) / (y_max - y_min) * (h - top - bottom); };

        static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
        std::string out;
        out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
               fmt_double(w) + "\" height=\"" + fmt_double(h) + "\">\n";
        out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out += text(w / 2, 22, title_, 15, "middle");
        out += text(w / 2, h - 12, x_label_, 12, "middle");
        out += "<text x=\"16\" y=\"" + fmt_double(h / 2) + "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
               fmt_double(h / 2) + ")\">" + escape(y_label_) + "</text>\n";
        // axes
        out += line(left, top, left, h - bottom);
        out += line(left, h - bottom, w - right, h - bottom);
        // 4 ticks per axis
        for (int t = 0; t <= 4; ++t) {
            const double fx = x_min + (x_max - x_min) * t / 4.0;
            const double fy = y_min + (y_max - y_min) * t / 4.0;
            out += line(px(fx), h - bottom, px(fx), h - bottom + 5);
            out += text(px(fx), h - bottom + 18, short_num(fx), 10, "middle");
            out += line(left - 5, py(fy), left, py(fy));
            out += text(left - 8, py(fy) + 3, short_num(fy), 10, "end");
        }
        // series
        for (std::size_t s = 0; s < series_.size(); ++s) {
            const auto& [name, pts] = series_[s];
            std::string poly = "<polyline fill=\"none\" stroke=\"";
            poly += colors[s % 5];
            poly += "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [x, y] : pts) {
                if (!std::isfinite(x) || !std::isfinite(y)) continue;
                poly += fmt_double(px(x)) + "," + fmt_double(py(y)) + " ";
            }
            poly += "\"/>\n";
            out += poly;
            const double ly = top + 14 * double(s);
            out += "<rect x=\"" + fmt_double(w - right - 130) + "\" y=\"" + fmt_double(ly) +
                   "\" width=\"10\" height=\"3\" fill=\"" + colors[s % 5] + "\"/>\n";
            out += text(w - right - 115, ly + 5, name, 10, "start");
        }
        out += "</svg>\n";
        return out;
    }

    void save(const std::filesystem::path& path) const { write_text_file(path, str()); }

private:
    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '<') out += "&lt;";
            else if (c == '>') out += "&gt;";
            else if (c == '&') out += "&amp;";
            else out += c;
        }
        return out;
    }

    static std::string short_num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4g", v);
        return buf;
    }

    static std::string line(double x1, double y1, double x2, double y2) {
        return "<line x1=\"" + fmt_double(x1) + "\" y1=\"" + fmt_double(y1) + "\" x2=\"" +
               fmt_double(x2) + "\" y2=\"" + fmt_double(y2) + "\" stroke=\"black\"/>\n";
    }

    static std::string text(double x, double y, const std::string& s, int size,
                            const std::string& anchor) {
        return "<text x=\"" + fmt_double(x) + "\" y=\"" + fmt_double(y) + "\" font-size=\"" +
               std::to_string(size) + "\" text-anchor=\"" + anchor + "\">" + escape(s) +
               "</text>\n";
    }

    std::string title_, x_label_, y_label_;
    std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> series_;
};

}  // namespace augrisk

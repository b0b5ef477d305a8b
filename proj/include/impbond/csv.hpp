#pragma once

// Long-form CSV output: one metric per row, every row carrying the full
// parameter tuple that produced it. Numbers print as %.16e (17 significant
// digits, '.' decimal) so repeated runs are byte-identical.

#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace impbond {

struct CsvRow {
    std::string study;
    std::string label;
    std::string metric;
    std::optional<double> gamma;
    std::optional<double> eps;
    std::optional<int> i, j;
    std::optional<double> x, y;
    std::optional<double> value;
    std::optional<double> reference;
    std::string pass;  // "pass", "fail", or empty when no tolerance applies
};

inline std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

inline std::string csv_field(const std::optional<double>& v) {
    return v ? csv_number(*v) : std::string();
}

inline std::string csv_field(const std::optional<int>& v) {
    return v ? std::to_string(*v) : std::string();
}

inline std::string format_csv(const std::vector<CsvRow>& rows) {
    std::string out = "study,case,metric,gamma,eps,i,j,x,y,value,reference,pass\n";
    for (const auto& r : rows) {
        out += r.study + ',' + r.label + ',' + r.metric + ',' + csv_field(r.gamma) + ',' +
               csv_field(r.eps) + ',' + csv_field(r.i) + ',' + csv_field(r.j) + ',' +
               csv_field(r.x) + ',' + csv_field(r.y) + ',' + csv_field(r.value) + ',' +
               csv_field(r.reference) + ',' + r.pass + '\n';
    }
    return out;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

}  // namespace impbond

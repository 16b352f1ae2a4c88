#include "cpd/types.hpp"

namespace cpd {

void TimeSeries::append_row(std::span<const double> y) {
    if (n == 0 && p == 0) {
        p = y.size();
    }
    if (y.size() != p) {
        throw DimensionMismatchError("append_row: expected dimension " + std::to_string(p) +
                                     ", got " + std::to_string(y.size()));
    }
    values.insert(values.end(), y.begin(), y.end());
    ++n;
}

void TimeSeries::validate() const {
    if (p < 1) {
        throw DimensionMismatchError("time series dimension must be >= 1");
    }
    if (n < 2) {
        throw DimensionMismatchError("time series needs at least 2 observations");
    }
    if (values.size() != n * p) {
        throw DimensionMismatchError("time series storage is inconsistent with n*p");
    }
    if (factor_dim > 0 && factors.size() != n * factor_dim) {
        throw DimensionMismatchError("factor count must equal the series length");
    }
}

TimeSeries TimeSeries::from_rows(const std::vector<std::vector<double>>& rows) {
    TimeSeries s;
    if (rows.empty()) {
        throw DimensionMismatchError("empty series");
    }
    s.p = rows.front().size();
    s.n = rows.size();
    s.values.reserve(s.n * s.p);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != s.p) {
            throw DimensionMismatchError("row " + std::to_string(i) + " has " +
                                         std::to_string(rows[i].size()) + " columns, expected " +
                                         std::to_string(s.p));
        }
        s.values.insert(s.values.end(), rows[i].begin(), rows[i].end());
    }
    s.validate();
    return s;
}

}  // namespace cpd

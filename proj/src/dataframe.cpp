#include "lmx/dataframe.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "lmx/errors.hpp"

namespace lmx {

const NumericData& Column::numeric() const {
    if (!is_numeric()) throw TypeError("column '" + name_ + "' is not numeric");
    return std::get<NumericData>(payload_);
}

const CategoricalData& Column::categorical() const {
    if (is_numeric()) throw TypeError("column '" + name_ + "' is not categorical");
    return std::get<CategoricalData>(payload_);
}

std::size_t Column::size() const {
    return is_numeric() ? std::get<NumericData>(payload_).size()
                        : std::get<CategoricalData>(payload_).codes.size();
}

bool Column::is_missing(std::size_t row) const {
    return is_numeric() ? !std::get<NumericData>(payload_)[row].has_value()
                        : !std::get<CategoricalData>(payload_).codes[row].has_value();
}

std::size_t Column::missing_count() const {
    std::size_t k = 0;
    for (std::size_t i = 0; i < size(); ++i)
        if (is_missing(i)) ++k;
    return k;
}

DataFrame::DataFrame(std::vector<Column> columns, std::size_t n_rows)
    : columns_(std::move(columns)), n_rows_(n_rows) {
    std::set<std::string> names;
    for (const auto& c : columns_) {
        if (c.size() != n_rows_)
            throw DataError("column '" + c.name() + "' has " + std::to_string(c.size()) +
                            " cells, expected " + std::to_string(n_rows_));
        if (!names.insert(c.name()).second)
            throw DataError("duplicate column name '" + c.name() + "'");
    }
}

const Column& DataFrame::column(const std::string& name) const {
    for (const auto& c : columns_)
        if (c.name() == name) return c;
    throw DataError("no column named '" + name + "'");
}

bool DataFrame::has_column(const std::string& name) const {
    for (const auto& c : columns_)
        if (c.name() == name) return true;
    return false;
}

DataFrame DataFrame::with_column(Column col) const {
    auto cols = columns_;
    cols.push_back(std::move(col));
    return DataFrame(std::move(cols), n_rows_);
}

namespace {

bool is_missing_token(const std::string& s) { return s.empty() || s == "NA"; }

bool parse_number(const std::string& s, double& out) {
    const char* p = s.c_str();
    char* end = nullptr;
    out = std::strtod(p, &end);
    if (end == p) return false;
    while (*end == ' ' || *end == '\t') ++end;
    return *end == '\0';
}

// Splits one CSV record honoring double-quote escaping; reads further lines
// from `in` when a quoted field spans a newline.
std::vector<std::string> split_record(std::string line, std::istream& in) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    std::size_t i = 0;
    while (true) {
        if (i == line.size()) {
            if (!quoted) break;
            std::string next;
            if (!std::getline(in, next)) throw DataError("unterminated quoted field");
            cur += '\n';
            line = std::move(next);
            i = 0;
            continue;
        }
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    i += 2;
                } else {
                    quoted = false;
                    ++i;
                }
            } else {
                cur += ch;
                ++i;
            }
        } else if (ch == '"') {
            quoted = true;
            ++i;
        } else if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
            ++i;
        } else {
            cur += ch;
            ++i;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

DataFrame read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty input");
    auto header = split_record(strip_cr(line), in);
    {
        std::set<std::string> seen;
        for (const auto& h : header)
            if (!seen.insert(h).second) throw DataError("duplicate header name '" + h + "'");
    }

    std::vector<std::vector<std::string>> cells(header.size());
    std::size_t n = 0;
    std::size_t record_no = 1;
    while (std::getline(in, line)) {
        ++record_no;
        line = strip_cr(line);
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        auto fields = split_record(line, in);
        if (fields.size() != header.size())
            throw DataError("ragged row " + std::to_string(record_no) + ": got " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
        for (std::size_t j = 0; j < fields.size(); ++j) cells[j].push_back(std::move(fields[j]));
        ++n;
    }
    if (n == 0) throw DataError("no data rows");

    std::vector<Column> cols;
    cols.reserve(header.size());
    for (std::size_t j = 0; j < header.size(); ++j) {
        bool all_numeric = true;
        for (const auto& s : cells[j]) {
            if (is_missing_token(s)) continue;
            double v;
            if (!parse_number(s, v)) {
                all_numeric = false;
                break;
            }
        }
        if (all_numeric) {  // vacuously numeric when every cell is missing
            NumericData vals(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (is_missing_token(cells[j][i])) continue;
                double v;
                parse_number(cells[j][i], v);
                vals[i] = v;
            }
            cols.emplace_back(header[j], std::move(vals));
        } else {
            std::set<std::string> level_set;
            for (const auto& s : cells[j])
                if (!is_missing_token(s)) level_set.insert(s);
            CategoricalData cat;
            cat.levels.assign(level_set.begin(), level_set.end());
            cat.codes.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (is_missing_token(cells[j][i])) continue;
                const auto it = std::lower_bound(cat.levels.begin(), cat.levels.end(), cells[j][i]);
                cat.codes[i] = static_cast<int>(it - cat.levels.begin());
            }
            cols.emplace_back(header[j], std::move(cat));
        }
    }
    return DataFrame(std::move(cols), n);
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += '"';
    return out;
}

std::string format_cell(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void write_csv(const DataFrame& df, std::ostream& out) {
    for (std::size_t j = 0; j < df.n_cols(); ++j) {
        if (j) out << ',';
        out << csv_escape(df.columns()[j].name());
    }
    out << '\n';
    for (std::size_t i = 0; i < df.n_rows(); ++i) {
        for (std::size_t j = 0; j < df.n_cols(); ++j) {
            if (j) out << ',';
            const Column& c = df.columns()[j];
            if (c.is_missing(i)) {
                out << "NA";
            } else if (c.is_numeric()) {
                out << format_cell(*c.numeric()[i]);
            } else {
                out << csv_escape(c.categorical().levels[*c.categorical().codes[i]]);
            }
        }
        out << '\n';
    }
}

std::vector<MissingCell> missing_report(const DataFrame& df) {
    std::vector<MissingCell> out;
    for (const auto& c : df.columns())
        for (std::size_t i = 0; i < df.n_rows(); ++i)
            if (c.is_missing(i)) out.push_back({i, c.name()});
    return out;
}

DataFrame derive_center(const DataFrame& df, const std::string& col) {
    const auto& vals = df.column(col).numeric();
    double sum = 0.0;
    std::size_t k = 0;
    for (const auto& v : vals)
        if (v) {
            sum += *v;
            ++k;
        }
    if (k == 0) throw DataError("column '" + col + "' has no non-missing values");
    const double mean = sum / static_cast<double>(k);
    NumericData shifted(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i)
        if (vals[i]) shifted[i] = *vals[i] - mean;
    return df.with_column(Column(col + ".c", std::move(shifted)));
}

DataFrame derive_transform(const DataFrame& df, const std::string& col, TransformKind kind) {
    const auto& vals = df.column(col).numeric();
    NumericData out(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (!vals[i]) continue;
        if (kind == TransformKind::Log) {
            if (*vals[i] <= 0.0)
                throw DomainError("log of nonpositive value in column '" + col + "' at row " +
                                  std::to_string(i));
            out[i] = std::log(*vals[i]);
        } else {
            out[i] = *vals[i] * *vals[i];
        }
    }
    const std::string suffix = kind == TransformKind::Log ? ".log" : ".sq";
    return df.with_column(Column(col + suffix, std::move(out)));
}

namespace {

// Tukey hinges: median of the lower/upper half, halves including the median
// point when n is odd.
double median_of(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    const std::size_t m = hi - lo;
    const std::size_t mid = lo + m / 2;
    return m % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

std::vector<GroupStatsRow> group_stats(const DataFrame& df, const std::string& response,
                                       const std::vector<std::string>& factors) {
    const auto& y = df.column(response).numeric();
    std::vector<const CategoricalData*> facs;
    for (const auto& f : factors) facs.push_back(&df.column(f).categorical());

    std::map<std::vector<int>, std::vector<double>> groups;
    for (std::size_t i = 0; i < df.n_rows(); ++i) {
        if (!y[i]) continue;
        std::vector<int> key;
        bool ok = true;
        for (const auto* f : facs) {
            if (!f->codes[i]) {
                ok = false;
                break;
            }
            key.push_back(*f->codes[i]);
        }
        if (ok) groups[key].push_back(*y[i]);
    }

    std::vector<GroupStatsRow> out;
    for (auto& [key, vals] : groups) {
        std::sort(vals.begin(), vals.end());
        const std::size_t n = vals.size();
        GroupStatsRow row;
        for (std::size_t j = 0; j < key.size(); ++j)
            row.labels.push_back(facs[j]->levels[key[j]]);
        row.min = vals.front();
        row.max = vals.back();
        row.median = median_of(vals, 0, n);
        const std::size_t half = (n + 1) / 2;  // lower half includes the median when n odd
        row.q1 = median_of(vals, 0, half);
        row.q3 = median_of(vals, n - half, n);
        row.n = n;
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace lmx

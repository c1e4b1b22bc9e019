#include "semfeat/feature_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "semfeat/common.hpp"

namespace semfeat {

std::string_view to_string(FeatureFormat format) {
    return format == FeatureFormat::Csv ? "csv" : "svmlight";
}

FeatureFormat parse_feature_format(std::string_view name) {
    if (name == "csv") return FeatureFormat::Csv;
    if (name == "svmlight" || name == "libsvm") return FeatureFormat::Svmlight;
    throw Error("unknown feature format '" + std::string(name) + "' (expected csv or svmlight)");
}

FeatureFormat format_from_path(std::string_view path) {
    return path.size() >= 4 && path.substr(path.size() - 4) == ".csv" ? FeatureFormat::Csv
                                                                      : FeatureFormat::Svmlight;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        auto pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

double parse_number(std::string_view text, std::size_t line) {
    text = trim(text);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw Error("features", "line " + std::to_string(line) + ": bad number '" + std::string(text) + "'");
    return value;
}

long long parse_integer(std::string_view text, std::size_t line) {
    text = trim(text);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw Error("features", "line " + std::to_string(line) + ": bad integer '" + std::string(text) + "'");
    return value;
}

void write_csv(std::ostream& out, const FeatureTable& table) {
    out << "image_id,label";
    for (std::size_t a = 1; a <= table.dimension; ++a) out << ",v" << a;
    out << '\n';
    for (const auto& row : table.rows) {
        out << row.image_id << ',' << row.label;
        for (double v : row.values) out << ',' << format_double(v);
        out << '\n';
    }
}

void write_svmlight(std::ostream& out, const FeatureTable& table) {
    out << "# semfeat dim=" << table.dimension << " categories=";
    for (std::size_t i = 0; i < table.categories.size(); ++i)
        out << (i ? "," : "") << table.categories[i];
    out << '\n';
    for (const auto& row : table.rows) {
        out << row.label_index;
        for (std::size_t a = 0; a < row.values.size(); ++a)
            if (row.values[a] != 0.0) out << ' ' << (a + 1) << ':' << format_double(row.values[a]);
        out << " # " << row.image_id << '\n';
    }
}

FeatureTable read_csv(std::istream& in) {
    FeatureTable table;
    std::string text;
    std::size_t line = 0;
    bool header_seen = false;
    while (std::getline(in, text)) {
        ++line;
        std::string_view view = trim(text);
        if (view.empty()) continue;
        auto fields = split(view, ',');
        if (!header_seen) {
            if (fields.size() < 2 || trim(fields[0]) != "image_id" || trim(fields[1]) != "label")
                throw Error("features", "line " + std::to_string(line) + ": expected CSV header");
            table.dimension = fields.size() - 2;
            header_seen = true;
            continue;
        }
        if (fields.size() != table.dimension + 2)
            throw Error("features", "line " + std::to_string(line) + ": expected " +
                                        std::to_string(table.dimension + 2) + " fields");
        FeatureVector row;
        row.image_id = std::string(trim(fields[0]));
        row.label = std::string(trim(fields[1]));
        auto it = std::find(table.categories.begin(), table.categories.end(), row.label);
        if (it == table.categories.end()) {
            table.categories.push_back(row.label);
            it = table.categories.end() - 1;
        }
        row.label_index = static_cast<int>(it - table.categories.begin());
        for (std::size_t a = 0; a < table.dimension; ++a)
            row.values.push_back(parse_number(fields[a + 2], line));
        table.rows.push_back(std::move(row));
    }
    return table;
}

FeatureTable read_svmlight(std::istream& in) {
    FeatureTable table;
    bool have_header = false;
    std::string text;
    std::size_t line = 0;
    std::size_t max_attr = 0;
    struct Pending {
        long long label;
        std::string id;
        std::vector<std::pair<std::size_t, double>> entries;
    };
    std::vector<Pending> pending;
    while (std::getline(in, text)) {
        ++line;
        std::string_view view = trim(text);
        if (view.empty()) continue;
        if (view.front() == '#') {
            auto body = trim(view.substr(1));
            if (body.rfind("semfeat", 0) == 0 && pending.empty()) {
                for (auto token : split(body, ' ')) {
                    if (token.rfind("dim=", 0) == 0)
                        table.dimension = static_cast<std::size_t>(parse_integer(token.substr(4), line));
                    else if (token.rfind("categories=", 0) == 0)
                        for (auto name : split(token.substr(11), ','))
                            if (!name.empty()) table.categories.emplace_back(name);
                }
                have_header = true;
            }
            continue;
        }
        Pending row;
        auto hash = view.find('#');
        if (hash != std::string_view::npos) {
            row.id = std::string(trim(view.substr(hash + 1)));
            view = trim(view.substr(0, hash));
        }
        auto tokens = split(view, ' ');
        tokens.erase(std::remove_if(tokens.begin(), tokens.end(), [](auto t) { return t.empty(); }),
                     tokens.end());
        if (tokens.empty()) throw Error("features", "line " + std::to_string(line) + ": missing label");
        row.label = parse_integer(tokens[0], line);
        std::size_t previous = 0;
        for (std::size_t t = 1; t < tokens.size(); ++t) {
            auto colon = tokens[t].find(':');
            if (colon == std::string_view::npos)
                throw Error("features", "line " + std::to_string(line) + ": expected <attr>:<value>");
            const auto attr = parse_integer(tokens[t].substr(0, colon), line);
            if (attr < 1 || static_cast<std::size_t>(attr) <= previous)
                throw Error("features", "line " + std::to_string(line) +
                                            ": attributes must be 1-based and increasing");
            previous = static_cast<std::size_t>(attr);
            row.entries.emplace_back(previous, parse_number(tokens[t].substr(colon + 1), line));
        }
        max_attr = std::max(max_attr, previous);
        if (row.id.empty()) row.id = "row" + std::to_string(pending.size() + 1);
        pending.push_back(std::move(row));
    }

    if (!have_header) {
        table.dimension = max_attr;
        std::vector<long long> labels;
        for (const auto& p : pending) labels.push_back(p.label);
        std::sort(labels.begin(), labels.end());
        labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
        for (auto l : labels) table.categories.push_back(std::to_string(l));
    }
    if (max_attr > table.dimension)
        throw Error("features", "attribute index exceeds declared dimension");

    for (auto& p : pending) {
        FeatureVector row;
        row.image_id = std::move(p.id);
        if (have_header) {
            if (p.label < 0 || static_cast<std::size_t>(p.label) >= table.categories.size())
                throw Error("features", "label index " + std::to_string(p.label) + " out of range");
            row.label_index = static_cast<int>(p.label);
        } else {
            auto it = std::find(table.categories.begin(), table.categories.end(), std::to_string(p.label));
            row.label_index = static_cast<int>(it - table.categories.begin());
        }
        row.label = table.categories[static_cast<std::size_t>(row.label_index)];
        row.values.assign(table.dimension, 0.0);
        for (auto [attr, value] : p.entries) row.values[attr - 1] = value;
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace

void write_features(std::ostream& out, const FeatureTable& table, FeatureFormat format) {
    for (const auto& row : table.rows)
        if (row.values.size() != table.dimension)
            throw Error("features", "row '" + row.image_id + "' does not match table dimension");
    if (format == FeatureFormat::Csv)
        write_csv(out, table);
    else
        write_svmlight(out, table);
}

FeatureTable read_features(std::istream& in, FeatureFormat format) {
    return format == FeatureFormat::Csv ? read_csv(in) : read_svmlight(in);
}

void save_features(const std::string& path, const FeatureTable& table, FeatureFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("features", "cannot write '" + path + "'");
    write_features(out, table, format);
}

FeatureTable load_features(const std::string& path, FeatureFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("features", "cannot open '" + path + "'");
    return read_features(in, format);
}

}  // namespace semfeat

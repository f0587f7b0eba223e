#include "rlcombine/panel.hpp"

#include "csv_util.hpp"
#include "rlcombine/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <unordered_set>

namespace rlcombine {

using detail::format_double;
using detail::parse_cell;
using detail::split_csv;
using detail::trim;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

} // namespace

Eigen::Index ForecastPanel::model_index(std::string_view name) const {
    for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(model_names.size()); ++a) {
        if (model_names[static_cast<std::size_t>(a)] == name) return a;
    }
    return -1;
}

void validate_panel(const ForecastPanel& panel) {
    const Eigen::Index T = panel.periods();
    const Eigen::Index n = panel.models();
    if (T == 0) throw ValidationError("panel has no periods");
    if (n == 0) throw ValidationError("panel has no models");
    if (panel.forecasts.rows() != T || panel.available.rows() != T ||
        panel.available.cols() != n) {
        throw ValidationError("panel dimensions are inconsistent");
    }
    if (static_cast<Eigen::Index>(panel.model_names.size()) != n) {
        throw ValidationError("model_names length does not match forecast columns");
    }
    if (static_cast<Eigen::Index>(panel.time_labels.size()) != T) {
        throw ValidationError("time_labels length does not match periods");
    }
    if (panel.horizon < 1) throw ValidationError("horizon must be positive");

    std::unordered_set<std::string> seen;
    for (const auto& name : panel.model_names) {
        if (name.empty()) throw ValidationError("empty model name");
        if (!seen.insert(name).second) {
            throw ValidationError("duplicate model column '" + name + "'");
        }
    }

    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < panel.time_labels.size(); ++i) {
        const double t = parse_cell(panel.time_labels[i], 0, "time label");
        if (t <= prev) throw ValidationError("time labels are not strictly increasing");
        prev = t;
    }

    for (Eigen::Index t = 0; t < T; ++t) {
        if (!std::isfinite(panel.y[t])) {
            throw ValidationError("missing realized value inside the evaluation window");
        }
        if (!panel.available.row(t).any()) {
            throw ValidationError("no available forecast at period " +
                                  panel.time_labels[static_cast<std::size_t>(t)]);
        }
    }
}

ForecastPanel load_wide_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file '" + path.string() + "'");
    const auto header = split_csv(line);
    if (header.size() < 3 || header[0] != "t" || header[1] != "y") {
        throw ParseError("wide CSV header must be t,y,<model...>", 1);
    }

    std::vector<std::string> model_names(header.begin() + 2, header.end());
    const auto n = static_cast<Eigen::Index>(model_names.size());
    {
        std::unordered_set<std::string> seen;
        for (const auto& name : model_names) {
            if (name.empty()) throw ValidationError("empty model column name in header");
            if (!seen.insert(name).second) {
                throw ValidationError("duplicate model column '" + name + "'");
            }
        }
    }

    struct Row {
        std::string label;
        bool has_y;
        double y;
        std::vector<double> f;
        std::vector<bool> avail;
        std::size_t line_no;
    };
    std::vector<Row> rows;
    std::size_t line_no = 1;
    double prev_t = -std::numeric_limits<double>::infinity();
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        if (static_cast<Eigen::Index>(cells.size()) != n + 2) {
            throw ParseError("expected " + std::to_string(n + 2) + " cells, got " +
                                 std::to_string(cells.size()),
                             line_no);
        }
        Row row;
        row.label = cells[0];
        row.line_no = line_no;
        const double t = parse_cell(cells[0], line_no, "t");
        if (t <= prev_t) throw ParseError("time index not strictly increasing", line_no);
        prev_t = t;
        row.has_y = !cells[1].empty();
        row.y = row.has_y ? parse_cell(cells[1], line_no, "y") : kNaN;
        row.f.resize(static_cast<std::size_t>(n));
        row.avail.resize(static_cast<std::size_t>(n));
        for (Eigen::Index a = 0; a < n; ++a) {
            const auto& cell = cells[static_cast<std::size_t>(a) + 2];
            if (cell.empty()) {
                row.f[static_cast<std::size_t>(a)] = kNaN;
                row.avail[static_cast<std::size_t>(a)] = false;
            } else {
                row.f[static_cast<std::size_t>(a)] = parse_cell(cell, line_no, "forecast");
                row.avail[static_cast<std::size_t>(a)] = true;
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("no data rows in '" + path.string() + "'");

    // Rows without y are trimmed from the ends only.
    std::size_t begin = 0, end = rows.size();
    while (begin < end && !rows[begin].has_y) ++begin;
    while (end > begin && !rows[end - 1].has_y) --end;
    if (begin == end) throw ValidationError("no rows with a realized value");
    for (std::size_t i = begin; i < end; ++i) {
        if (!rows[i].has_y) {
            throw ValidationError("missing y inside the evaluation window (line " +
                                  std::to_string(rows[i].line_no) + ")");
        }
    }

    const auto T = static_cast<Eigen::Index>(end - begin);
    ForecastPanel panel;
    panel.series_id = path.stem().string();
    panel.model_names = std::move(model_names);
    panel.time_labels.reserve(static_cast<std::size_t>(T));
    panel.y.resize(T);
    panel.forecasts.resize(T, n);
    panel.available.resize(T, n);
    for (Eigen::Index t = 0; t < T; ++t) {
        const Row& row = rows[begin + static_cast<std::size_t>(t)];
        panel.time_labels.push_back(row.label);
        panel.y[t] = row.y;
        for (Eigen::Index a = 0; a < n; ++a) {
            panel.forecasts(t, a) = row.f[static_cast<std::size_t>(a)];
            panel.available(t, a) = row.avail[static_cast<std::size_t>(a)];
        }
    }
    validate_panel(panel);
    return panel;
}

void save_wide_csv(const ForecastPanel& panel, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "t,y";
    for (const auto& name : panel.model_names) out << ',' << name;
    out << '\n';
    for (Eigen::Index t = 0; t < panel.periods(); ++t) {
        out << panel.time_labels[static_cast<std::size_t>(t)] << ','
            << format_double(panel.y[t]);
        for (Eigen::Index a = 0; a < panel.models(); ++a) {
            out << ',';
            if (panel.available(t, a)) out << format_double(panel.forecasts(t, a));
        }
        out << '\n';
    }
}

namespace {

struct SeriesValues {
    std::vector<std::string> ids; // insertion order
    std::unordered_map<std::string, std::vector<double>> values;
};

std::string strip_quotes(const std::string& cell) {
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
        return cell.substr(1, cell.size() - 2);
    }
    return cell;
}

// `id,v1,v2,...` rows; a leading header row is skipped if its second cell is
// not numeric. Cells may be double-quoted (the published competition files
// quote ids). Trailing empty cells are dropped, interior empties kept as NaN.
SeriesValues read_m4_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    SeriesValues out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv(line);
        for (auto& cell : cells) cell = strip_quotes(cell);
        if (cells.size() < 2) {
            throw ParseError("expected id plus at least one value in '" + path.string() + "'",
                             line_no);
        }
        if (line_no == 1) {
            double probe = 0.0;
            const auto* f = cells[1].data();
            const auto [p, ec] = std::from_chars(f, f + cells[1].size(), probe);
            if (ec != std::errc() || p != f + cells[1].size()) continue; // header row
        }
        while (cells.size() > 2 && cells.back().empty()) cells.pop_back();
        std::vector<double> vals;
        vals.reserve(cells.size() - 1);
        for (std::size_t i = 1; i < cells.size(); ++i) {
            vals.push_back(cells[i].empty() ? kNaN : parse_cell(cells[i], line_no, "value"));
        }
        std::string id = cells[0];
        if (out.values.count(id)) {
            throw ValidationError("duplicate series id '" + id + "' in '" + path.string() + "'");
        }
        out.ids.push_back(id);
        out.values.emplace(std::move(id), std::move(vals));
    }
    return out;
}

} // namespace

std::vector<ForecastPanel> load_m4_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw ParseError("'" + dir.string() + "' is not a directory");
    }
    const auto actuals_path = dir / "actuals.csv";
    if (!std::filesystem::exists(actuals_path)) {
        throw ParseError("missing actuals.csv in '" + dir.string() + "'");
    }
    const SeriesValues actuals = read_m4_file(actuals_path);
    if (actuals.ids.empty()) throw ValidationError("actuals.csv has no series");

    std::vector<std::filesystem::path> method_files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto& p = entry.path();
        if (p.extension() != ".csv" || p.filename() == "actuals.csv") continue;
        method_files.push_back(p);
    }
    std::sort(method_files.begin(), method_files.end());
    if (method_files.empty()) {
        throw ValidationError("no method files next to actuals.csv in '" + dir.string() + "'");
    }

    std::vector<std::string> methods;
    std::vector<SeriesValues> method_values;
    methods.reserve(method_files.size());
    for (const auto& p : method_files) {
        methods.push_back(p.stem().string());
        method_values.push_back(read_m4_file(p));
    }

    const auto n = static_cast<Eigen::Index>(methods.size());
    std::vector<ForecastPanel> panels;
    panels.reserve(actuals.ids.size());
    for (const auto& id : actuals.ids) {
        const auto& yv = actuals.values.at(id);
        const auto T = static_cast<Eigen::Index>(yv.size());
        ForecastPanel panel;
        panel.series_id = id;
        panel.model_names = methods;
        panel.y.resize(T);
        panel.forecasts.resize(T, n);
        panel.available.resize(T, n);
        panel.time_labels.reserve(static_cast<std::size_t>(T));
        for (Eigen::Index t = 0; t < T; ++t) {
            if (!std::isfinite(yv[static_cast<std::size_t>(t)])) {
                throw ValidationError("missing actual for series '" + id + "'");
            }
            panel.y[t] = yv[static_cast<std::size_t>(t)];
            panel.time_labels.push_back(std::to_string(t + 1));
        }
        for (Eigen::Index a = 0; a < n; ++a) {
            const auto& sv = method_values[static_cast<std::size_t>(a)];
            const auto it = sv.values.find(id);
            if (it == sv.values.end()) {
                panel.forecasts.col(a).setConstant(kNaN);
                panel.available.col(a).setConstant(false);
                continue;
            }
            if (static_cast<Eigen::Index>(it->second.size()) != T) {
                throw ValidationError("method '" + methods[static_cast<std::size_t>(a)] +
                                      "' has " + std::to_string(it->second.size()) +
                                      " steps for series '" + id + "', expected " +
                                      std::to_string(T));
            }
            for (Eigen::Index t = 0; t < T; ++t) {
                const double v = it->second[static_cast<std::size_t>(t)];
                panel.forecasts(t, a) = v;
                panel.available(t, a) = std::isfinite(v);
            }
        }
        validate_panel(panel);
        panels.push_back(std::move(panel));
    }
    return panels;
}

ForecastPanel load_panel(const std::filesystem::path& path, PanelFormat format) {
    switch (format) {
    case PanelFormat::WideCsv:
        return load_wide_csv(path);
    case PanelFormat::M4Pair: {
        auto panels = load_m4_directory(path);
        if (panels.size() != 1) {
            throw ValidationError("M4 directory holds " + std::to_string(panels.size()) +
                                  " series; use the multi-series loader");
        }
        return std::move(panels.front());
    }
    }
    throw ValidationError("unknown panel format");
}

std::vector<std::string> GroupMap::group_order() const {
    std::vector<std::string> order;
    for (const auto& [model, group] : entries) {
        if (std::find(order.begin(), order.end(), group) == order.end()) {
            order.push_back(group);
        }
    }
    return order;
}

GroupMap load_group_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty group map", 1);
    const auto header = split_csv(line);
    if (header.size() != 2 || header[0] != "model" || header[1] != "group") {
        throw ParseError("group map header must be model,group", 1);
    }
    GroupMap map;
    std::size_t line_no = 1;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 2) throw ParseError("expected model,group", line_no);
        if (cells[0].empty() || cells[1].empty()) {
            throw ValidationError("empty model or group name (line " + std::to_string(line_no) +
                                  ")");
        }
        if (!seen.insert(cells[0]).second) {
            throw ValidationError("model '" + cells[0] + "' mapped twice");
        }
        map.entries.emplace_back(cells[0], cells[1]);
    }
    if (map.entries.empty()) throw ValidationError("group map has no entries");
    return map;
}

ForecastPanel group_mean_panel(const ForecastPanel& panel, const GroupMap& groups) {
    const auto group_names = groups.group_order();
    const auto g_count = static_cast<Eigen::Index>(group_names.size());

    // members[g] = panel column indices, ascending, so the sum order is
    // independent of the group map's row order.
    std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(g_count));
    for (const auto& [model, group] : groups.entries) {
        const Eigen::Index col = panel.model_index(model);
        if (col < 0) {
            throw ValidationError("group map refers to unknown model '" + model + "'");
        }
        const auto g = static_cast<std::size_t>(
            std::find(group_names.begin(), group_names.end(), group) - group_names.begin());
        members[g].push_back(col);
    }
    for (auto& m : members) std::sort(m.begin(), m.end());

    const Eigen::Index T = panel.periods();
    ForecastPanel out;
    out.series_id = panel.series_id;
    out.time_labels = panel.time_labels;
    out.y = panel.y;
    out.horizon = panel.horizon;
    out.model_names = group_names;
    out.forecasts.resize(T, g_count);
    out.available.resize(T, g_count);
    for (Eigen::Index t = 0; t < T; ++t) {
        for (Eigen::Index g = 0; g < g_count; ++g) {
            double sum = 0.0;
            Eigen::Index count = 0;
            for (const Eigen::Index col : members[static_cast<std::size_t>(g)]) {
                if (panel.available(t, col)) {
                    sum += panel.forecasts(t, col);
                    ++count;
                }
            }
            if (count > 0) {
                out.forecasts(t, g) = sum / static_cast<double>(count);
                out.available(t, g) = true;
            } else {
                out.forecasts(t, g) = kNaN;
                out.available(t, g) = false;
            }
        }
    }
    validate_panel(out);
    return out;
}

std::optional<double> mean_available_forecast(const ForecastPanel& panel, Eigen::Index t) {
    double sum = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index a = 0; a < panel.models(); ++a) {
        if (panel.available(t, a)) {
            sum += panel.forecasts(t, a);
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

ForecastPanel append_benchmark_average(const ForecastPanel& panel) {
    if (panel.model_index(kSimpleAverageName) >= 0) {
        throw ValidationError("panel already has a 'simple_average' column");
    }
    const Eigen::Index T = panel.periods();
    const Eigen::Index n = panel.models();
    ForecastPanel out = panel;
    out.model_names.emplace_back(kSimpleAverageName);
    out.forecasts.conservativeResize(T, n + 1);
    out.available.conservativeResize(T, n + 1);
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto mean = mean_available_forecast(panel, t);
        if (mean) {
            out.forecasts(t, n) = *mean;
            out.available(t, n) = true;
        } else {
            out.forecasts(t, n) = kNaN;
            out.available(t, n) = false;
        }
    }
    return out;
}

} // namespace rlcombine

#include "hmtl/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "hmtl/model_io.hpp"

namespace hmtl {

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ','))
        cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    return cells;
}

double parse_double(const std::string& cell, const std::string& column, std::size_t line) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (!cell.empty() && *first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (cell.empty() || ec != std::errc() || ptr != last)
        throw ParseError("non-numeric value '" + cell + "' in column '" + column + "'", line);
    if (!std::isfinite(v))
        throw ParseError("non-finite value in column '" + column + "'", line);
    return v;
}

long parse_long(const std::string& cell, const std::string& column, std::size_t line) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError("non-integer value '" + cell + "' in column '" + column + "'", line);
    return v;
}

struct GridEntry {
    Index row;
    Index col;
    double lat;
    double lon;
};

std::map<long, GridEntry> load_grid(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw ParseError("cannot open grid file '" + path + "'");
    std::string line;
    if (!std::getline(is, line))
        throw ParseError("grid file '" + path + "' is empty", 1);
    const auto header = split_csv(line);
    const std::vector<std::string> expected{"location_id", "row", "col", "lat", "lon"};
    for (const auto& name : expected)
        if (std::find(header.begin(), header.end(), name) == header.end())
            throw ParseError("grid file is missing column '" + name + "'", 1);
    auto col_of = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    };
    const std::size_t c_id = col_of("location_id"), c_row = col_of("row"), c_col = col_of("col"),
                      c_lat = col_of("lat"), c_lon = col_of("lon");
    std::map<long, GridEntry> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw ParseError("grid file row has " + std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(header.size()),
                             lineno);
        const long id = parse_long(cells[c_id], "location_id", lineno);
        GridEntry e{parse_long(cells[c_row], "row", lineno), parse_long(cells[c_col], "col", lineno),
                    parse_double(cells[c_lat], "lat", lineno), parse_double(cells[c_lon], "lon", lineno)};
        if (e.row < 0 || e.col < 0)
            throw ParseError("grid row/col must be nonnegative", lineno);
        if (!out.emplace(id, e).second)
            throw ParseError("duplicate location_id " + std::to_string(id) + " in grid file", lineno);
    }
    return out;
}

struct SeriesRow {
    int year;
    int month;
    double observed;
    Vector esm;
};

}  // namespace

ClimateTable load_gridded_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream is(path);
    if (!is)
        throw ParseError("cannot open data file '" + path + "'");
    std::string line;
    if (!std::getline(is, line))
        throw ParseError("data file '" + path + "' is empty", 1);
    const auto header = split_csv(line);

    const std::vector<std::string> fixed{"variable", "year", "month", "location_id", "lat", "lon", "observed"};
    std::vector<std::size_t> fixed_pos;
    for (const auto& name : fixed) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw ParseError("missing column '" + name + "'", 1);
        fixed_pos.push_back(static_cast<std::size_t>(it - header.begin()));
    }
    std::vector<std::size_t> esm_pos;
    for (Index j = 1;; ++j) {
        auto it = std::find(header.begin(), header.end(), "esm_" + std::to_string(j));
        if (it == header.end())
            break;
        esm_pos.push_back(static_cast<std::size_t>(it - header.begin()));
    }
    if (esm_pos.empty())
        throw ParseError("missing column 'esm_1'", 1);
    if (header.size() != fixed.size() + esm_pos.size())
        throw ParseError("unexpected columns in header (esm columns must be esm_1..esm_d)", 1);
    const auto d = static_cast<Index>(esm_pos.size());
    if (schema.esm_count && *schema.esm_count != d)
        throw ParseError("expected " + std::to_string(*schema.esm_count) + " esm columns, found " +
                             std::to_string(d),
                         1);

    // (variable, location) -> rows, plus first line seen for diagnostics.
    std::map<std::pair<std::string, long>, std::vector<SeriesRow>> series;
    std::map<std::pair<std::string, long>, std::size_t> first_line;
    std::map<long, std::pair<double, double>> coords;
    std::set<std::tuple<std::string, long, int, int>> seen;
    std::vector<std::string> variable_order;

    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw ParseError("row has " + std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(header.size()),
                             lineno);
        const std::string& var = cells[fixed_pos[0]];
        if (var.empty())
            throw ParseError("empty variable name", lineno);
        const long year = parse_long(cells[fixed_pos[1]], "year", lineno);
        const long month = parse_long(cells[fixed_pos[2]], "month", lineno);
        if (month < 1 || month > 12)
            throw ParseError("month " + std::to_string(month) + " out of range 1-12", lineno);
        const long loc = parse_long(cells[fixed_pos[3]], "location_id", lineno);
        const double lat = parse_double(cells[fixed_pos[4]], "lat", lineno);
        const double lon = parse_double(cells[fixed_pos[5]], "lon", lineno);
        SeriesRow row{static_cast<int>(year), static_cast<int>(month),
                      parse_double(cells[fixed_pos[6]], "observed", lineno), Vector(d)};
        for (Index j = 0; j < d; ++j)
            row.esm(j) = parse_double(cells[esm_pos[static_cast<std::size_t>(j)]], header[esm_pos[static_cast<std::size_t>(j)]],
                                      lineno);

        if (!seen.emplace(var, loc, row.year, row.month).second)
            throw ParseError("duplicate record for variable '" + var + "', location " + std::to_string(loc) +
                                 ", " + std::to_string(year) + "-" + std::to_string(month),
                             lineno);
        if (std::find(variable_order.begin(), variable_order.end(), var) == variable_order.end())
            variable_order.push_back(var);
        coords.emplace(loc, std::make_pair(lat, lon));
        auto key = std::make_pair(var, loc);
        first_line.emplace(key, lineno);
        series[key].push_back(std::move(row));
    }
    if (series.empty())
        throw ParseError("data file '" + path + "' has no records");

    ClimateTable table;
    table.variables = variable_order;

    // Location order: grid order when metadata is given, else ascending id.
    std::vector<long> loc_ids;
    for (const auto& [id, c] : coords)
        loc_ids.push_back(id);
    if (schema.grid_path) {
        const auto grid = load_grid(*schema.grid_path);
        Index rows = 0, cols = 0;
        for (long id : loc_ids) {
            auto it = grid.find(id);
            if (it == grid.end())
                throw ParseError("location " + std::to_string(id) + " has no entry in grid file");
            rows = std::max(rows, it->second.row + 1);
            cols = std::max(cols, it->second.col + 1);
        }
        for (long id : loc_ids) {
            const auto& g = grid.at(id);
            table.locations.push_back({id, g.row, g.col, g.lat, g.lon});
        }
        std::sort(table.locations.begin(), table.locations.end(), [](const LocationInfo& a, const LocationInfo& b) {
            return std::tie(a.row, a.col) < std::tie(b.row, b.col);
        });
        bool full = static_cast<Index>(table.locations.size()) == rows * cols;
        for (std::size_t i = 0; full && i < table.locations.size(); ++i)
            full = table.locations[i].row * cols + table.locations[i].col == static_cast<Index>(i);
        if (full)
            table.grid = GridSpec{rows, cols};
    } else {
        for (long id : loc_ids)
            table.locations.push_back({id, -1, -1, coords[id].first, coords[id].second});
    }

    // Every (variable, location) must exist and share the time axis.
    bool have_axis = false;
    table.data.resize(table.variables.size());
    for (std::size_t v = 0; v < table.variables.size(); ++v) {
        for (const auto& loc : table.locations) {
            auto key = std::make_pair(table.variables[v], loc.id);
            auto it = series.find(key);
            if (it == series.end())
                throw ParseError("variable '" + table.variables[v] + "' has no records for location " +
                                 std::to_string(loc.id));
            auto& rows = it->second;
            std::sort(rows.begin(), rows.end(), [](const SeriesRow& a, const SeriesRow& b) {
                return std::tie(a.year, a.month) < std::tie(b.year, b.month);
            });
            if (!have_axis) {
                for (const auto& r : rows)
                    table.times.push_back({r.year, r.month, r.year});
                have_axis = true;
            } else {
                bool same = rows.size() == table.times.size();
                for (std::size_t i = 0; same && i < rows.size(); ++i)
                    same = rows[i].year == table.times[i].year && rows[i].month == table.times[i].month;
                if (!same)
                    throw ParseError("ragged time axis: variable '" + table.variables[v] + "', location " +
                                         std::to_string(loc.id) + " does not share the time axis of the first series",
                                     first_line[key]);
            }
            SubTaskData task{Matrix(static_cast<Index>(rows.size()), d), Vector(static_cast<Index>(rows.size()))};
            for (std::size_t i = 0; i < rows.size(); ++i) {
                task.X.row(static_cast<Index>(i)) = rows[i].esm.transpose();
                task.y(static_cast<Index>(i)) = rows[i].observed;
            }
            table.data[v].push_back(std::move(task));
        }
    }
    return table;
}

void write_gridded_csv(const std::string& path, const ClimateTable& table) {
    std::ofstream os(path);
    if (!os)
        throw InvalidInput("cannot open '" + path + "' for writing");
    os << "variable,year,month,location_id,lat,lon,observed";
    for (Index j = 1; j <= table.d(); ++j)
        os << ",esm_" << j;
    os << '\n';
    for (std::size_t v = 0; v < table.variables.size(); ++v) {
        for (std::size_t k = 0; k < table.locations.size(); ++k) {
            const auto& loc = table.locations[k];
            const auto& task = table.data[v][k];
            for (std::size_t i = 0; i < table.times.size(); ++i) {
                const auto r = static_cast<Index>(i);
                os << table.variables[v] << ',' << table.times[i].year << ',' << table.times[i].month << ','
                   << loc.id << ',' << format_double(loc.lat) << ',' << format_double(loc.lon) << ','
                   << format_double(task.y(r));
                for (Index j = 0; j < task.d(); ++j)
                    os << ',' << format_double(task.X(r, j));
                os << '\n';
            }
        }
    }
    if (!os)
        throw InvalidInput("failed writing '" + path + "'");
}

void write_grid_csv(const std::string& path, const ClimateTable& table) {
    std::ofstream os(path);
    if (!os)
        throw InvalidInput("cannot open '" + path + "' for writing");
    os << "location_id,row,col,lat,lon\n";
    for (const auto& loc : table.locations)
        os << loc.id << ',' << loc.row << ',' << loc.col << ',' << format_double(loc.lat) << ','
           << format_double(loc.lon) << '\n';
}

Season parse_season(const std::string& name) {
    if (name == "summer")
        return Season::summer;
    if (name == "winter")
        return Season::winter;
    if (name == "year")
        return Season::year;
    throw InvalidInput("unknown season '" + name + "' (expected summer, winter or year)");
}

const char* season_name(Season s) {
    switch (s) {
        case Season::summer: return "summer";
        case Season::winter: return "winter";
        case Season::year: return "year";
    }
    return "year";
}

ClimateTable extract_season(const ClimateTable& table, Season season, const SeasonMapping& mapping) {
    if (season == Season::year)
        return table;
    const auto& months = season == Season::summer ? mapping.summer : mapping.winter;
    auto has = [&](int mth) { return std::find(months.begin(), months.end(), mth) != months.end(); };
    const bool wraps = has(12) && has(1);

    std::vector<Index> keep;
    ClimateTable out;
    out.variables = table.variables;
    out.locations = table.locations;
    out.grid = table.grid;
    for (std::size_t i = 0; i < table.times.size(); ++i) {
        TimeKey key = table.times[i];
        if (!has(key.month))
            continue;
        key.season_year = key.year + ((wraps && key.month > 6) ? 1 : 0);
        out.times.push_back(key);
        keep.push_back(static_cast<Index>(i));
    }
    out.data.resize(table.data.size());
    for (std::size_t v = 0; v < table.data.size(); ++v) {
        for (const auto& task : table.data[v]) {
            SubTaskData sub{Matrix(static_cast<Index>(keep.size()), task.d()), Vector(static_cast<Index>(keep.size()))};
            for (std::size_t r = 0; r < keep.size(); ++r) {
                sub.X.row(static_cast<Index>(r)) = task.X.row(keep[r]);
                sub.y(static_cast<Index>(r)) = task.y(keep[r]);
            }
            out.data[v].push_back(std::move(sub));
        }
    }
    return out;
}

std::vector<WindowSplit> split_moving_window(const ClimateTable& table, int train_years, int test_years,
                                             int step_years, std::string* warning) {
    if (train_years < 1 || test_years < 1 || step_years < 0)
        throw InvalidInput("split_moving_window: train/test years must be >= 1 and step >= 0");
    const int step = step_years == 0 ? test_years : step_years;
    std::vector<WindowSplit> out;
    if (table.times.empty()) {
        if (warning)
            *warning = "table has no timestamps";
        return out;
    }
    int first = table.times.front().season_year;
    int last = first;
    for (const auto& t : table.times) {
        first = std::min(first, t.season_year);
        last = std::max(last, t.season_year);
    }
    for (int start = first; start + train_years + test_years - 1 <= last; start += step)
        out.push_back({start, start + train_years - 1, start + train_years, start + train_years + test_years - 1});
    if (out.empty() && warning)
        *warning = "span " + std::to_string(first) + "-" + std::to_string(last) + " is too short for " +
                   std::to_string(train_years) + " training + " + std::to_string(test_years) + " test years";
    return out;
}

HierarchicalDataset to_dataset(const ClimateTable& table, int first_year, int last_year) {
    std::vector<Index> rows;
    for (std::size_t i = 0; i < table.times.size(); ++i)
        if (table.times[i].season_year >= first_year && table.times[i].season_year <= last_year)
            rows.push_back(static_cast<Index>(i));
    HierarchicalDataset out;
    for (const auto& var : table.data) {
        SuperTask st;
        for (const auto& task : var) {
            SubTaskData sub{task.X(rows, Eigen::all), task.y(rows)};
            st.push_back(std::move(sub));
        }
        out.super_tasks.push_back(std::move(st));
    }
    return out;
}

HierarchicalDataset to_dataset(const ClimateTable& table) {
    HierarchicalDataset out;
    for (const auto& var : table.data)
        out.super_tasks.push_back(var);
    return out;
}

ClimateTable table_from_dataset(const HierarchicalDataset& data, int start_year) {
    validate(data);
    const Index n = data.super_tasks.front().front().n();
    for (const auto& st : data.super_tasks)
        for (const auto& task : st)
            if (task.n() != n)
                throw InvalidInput("table_from_dataset: all sub-tasks need the same sample count");
    ClimateTable table;
    for (Index t = 0; t < data.T(); ++t)
        table.variables.push_back("task" + std::to_string(t));
    for (Index k = 0; k < data.m(); ++k)
        table.locations.push_back({static_cast<long>(k), -1, -1, 0.0, 0.0});
    for (Index i = 0; i < n; ++i) {
        const int year = start_year + static_cast<int>(i / 12);
        table.times.push_back({year, static_cast<int>(i % 12) + 1, year});
    }
    for (const auto& st : data.super_tasks)
        table.data.push_back(st);
    return table;
}

}  // namespace hmtl

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "hmtl/baselines.hpp"
#include "hmtl/types.hpp"

namespace hmtl {

/// One row of the gridded CSV:
/// `variable,year,month,location_id,lat,lon,observed,esm_1,...,esm_d`.
struct GriddedRecord {
    std::string variable;
    int year = 0;
    int month = 1;
    long location_id = 0;
    double lat = 0.0;
    double lon = 0.0;
    double observed = 0.0;
    Vector esm_values;
};

struct LocationInfo {
    long id = 0;
    Index row = -1;  // -1 when no grid metadata was supplied
    Index col = -1;
    double lat = 0.0;
    double lon = 0.0;
};

struct TimeKey {
    int year = 0;
    int month = 1;
    int season_year = 0;  // year the record counts toward after season extraction

    friend bool operator==(const TimeKey&, const TimeKey&) = default;
};

/// Variables × locations × shared time axis. data[v][k] holds the ESM
/// matrix (rows = times) and observations of variable v at location k.
struct ClimateTable {
    std::vector<std::string> variables;
    std::vector<LocationInfo> locations;
    std::vector<TimeKey> times;
    std::vector<std::vector<SubTaskData>> data;
    std::optional<GridSpec> grid;  // set when locations fill a full lattice in grid order

    Index d() const noexcept {
        return (data.empty() || data.front().empty()) ? 0 : data.front().front().d();
    }
    Index m() const noexcept { return static_cast<Index>(locations.size()); }
};

struct CsvSchema {
    std::optional<Index> esm_count;       // require exactly this many esm_* columns
    std::optional<std::string> grid_path; // grid metadata file `location_id,row,col,lat,lon`
};

ClimateTable load_gridded_csv(const std::string& path, const CsvSchema& schema = {});

void write_gridded_csv(const std::string& path, const ClimateTable& table);
void write_grid_csv(const std::string& path, const ClimateTable& table);

enum class Season { summer, winter, year };

Season parse_season(const std::string& name);
const char* season_name(Season s);

/// Month sets per season. Defaults follow the Southern Hemisphere:
/// summer = DJF, winter = JJA. A set holding both 12 and 1 wraps the year
/// end; its late months count toward the following season year.
struct SeasonMapping {
    std::vector<int> summer{12, 1, 2};
    std::vector<int> winter{6, 7, 8};
};

ClimateTable extract_season(const ClimateTable& table, Season season, const SeasonMapping& mapping = {});

/// Inclusive season-year ranges of one moving window.
struct WindowSplit {
    int train_first = 0;
    int train_last = 0;
    int test_first = 0;
    int test_last = 0;
};

/// Windows of `train_years` followed by `test_years`, advancing by
/// `step_years` (0 means test_years). Empty when the span is too short; a
/// message is written to `warning` if provided.
std::vector<WindowSplit> split_moving_window(const ClimateTable& table, int train_years, int test_years,
                                             int step_years = 0, std::string* warning = nullptr);

/// Super-task per variable, sub-task per location, restricted to records
/// whose season year lies in [first_year, last_year].
HierarchicalDataset to_dataset(const ClimateTable& table, int first_year, int last_year);
HierarchicalDataset to_dataset(const ClimateTable& table);

/// Wraps a dataset with equal sample counts in a table with a synthetic
/// monthly time axis starting at `start_year` (sample i -> year start+i/12,
/// month i%12+1). Variables are named task0, task1, ...
ClimateTable table_from_dataset(const HierarchicalDataset& data, int start_year = 1);

}  // namespace hmtl

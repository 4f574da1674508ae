#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cohortlte/types.hpp"

namespace cohortlte {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// Reads the `user_id,arm,entry_day,day,metric,active` event log.
///
/// Rows are grouped into one record per user in order of first appearance.
/// Fractional day values are truncated to whole days. Throws InputError naming
/// the 1-based line number of the first malformed row.
std::vector<UserRecord> read_event_csv(std::istream& in);
std::vector<UserRecord> read_event_csv_file(const std::string& path);

void write_event_csv(std::ostream& out, std::span<const UserRecord> records);

}  // namespace cohortlte

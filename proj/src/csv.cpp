#include "cohortlte/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <unordered_map>

namespace cohortlte {

namespace {

constexpr std::string_view kHeader = "user_id,arm,entry_day,day,metric,active";

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_number(std::string_view text, std::size_t line_no, std::string_view field) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw InputError("line " + std::to_string(line_no) + ": invalid " +
                         std::string(field) + " '" + std::string(text) + "'");
    }
    return value;
}

int parse_day(std::string_view text, std::size_t line_no, std::string_view field) {
    const double v = parse_number(text, line_no, field);
    if (v < 0.0 || v > 1e9) {
        throw InputError("line " + std::to_string(line_no) + ": " + std::string(field) +
                         " out of range '" + std::string(text) + "'");
    }
    return static_cast<int>(std::trunc(v));
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::vector<UserRecord> read_event_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw InputError("line 1: missing header");
    }
    ++line_no;
    if (trim(line) != kHeader) {
        throw InputError("line 1: expected header '" + std::string(kHeader) + "'");
    }

    std::vector<UserRecord> records;
    std::unordered_map<std::string, std::size_t> index;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 6) {
            throw InputError("line " + std::to_string(line_no) + ": expected 6 fields, got " +
                             std::to_string(fields.size()));
        }
        const std::string user_id(fields[0]);
        if (user_id.empty()) {
            throw InputError("line " + std::to_string(line_no) + ": empty user_id");
        }
        Arm arm;
        if (fields[1] == "T") {
            arm = Arm::Treatment;
        } else if (fields[1] == "C") {
            arm = Arm::Control;
        } else {
            throw InputError("line " + std::to_string(line_no) + ": arm must be T or C, got '" +
                             std::string(fields[1]) + "'");
        }
        const int entry = parse_day(fields[2], line_no, "entry_day");
        const int day = parse_day(fields[3], line_no, "day");
        const double metric = parse_number(fields[4], line_no, "metric");
        if (metric < 0.0) {
            throw InputError("line " + std::to_string(line_no) + ": negative metric");
        }
        bool active;
        if (fields[5] == "1") {
            active = true;
        } else if (fields[5] == "0") {
            active = false;
        } else {
            throw InputError("line " + std::to_string(line_no) + ": active must be 0 or 1");
        }
        if (day < entry) {
            throw InputError("line " + std::to_string(line_no) + ": day precedes entry_day");
        }

        auto [it, inserted] = index.try_emplace(user_id, records.size());
        if (inserted) {
            records.push_back(UserRecord{user_id, arm, entry, {}});
        } else {
            const auto& rec = records[it->second];
            if (rec.arm != arm || rec.entry_day != entry) {
                throw InputError("line " + std::to_string(line_no) + ": user '" + user_id +
                                 "' changes arm or entry_day");
            }
        }
        records[it->second].observations.push_back(Observation{day, metric, active});
    }
    return records;
}

std::vector<UserRecord> read_event_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open '" + path + "'");
    }
    return read_event_csv(in);
}

void write_event_csv(std::ostream& out, std::span<const UserRecord> records) {
    out << kHeader << '\n';
    for (const auto& rec : records) {
        const char arm = rec.arm == Arm::Treatment ? 'T' : 'C';
        for (const auto& obs : rec.observations) {
            out << rec.user_id << ',' << arm << ',' << rec.entry_day << ',' << obs.day << ','
                << format_double(obs.metric) << ',' << (obs.active ? 1 : 0) << '\n';
        }
    }
}

}  // namespace cohortlte

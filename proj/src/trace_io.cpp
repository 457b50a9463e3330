#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "rtsec/engine.hpp"

namespace rtsec {

namespace {

std::string occupant_text(TaskId occupant) {
  if (occupant == kIdle) return "IDLE";
  if (occupant == kFlush) return "FLUSH";
  return std::to_string(occupant);
}

TaskId parse_occupant(const std::string& text) {
  if (text == "IDLE") return kIdle;
  if (text == "FLUSH") return kFlush;
  return std::stoi(text);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

void expect_header(std::istream& in, const std::string& header) {
  std::string line;
  if (!std::getline(in, line)) throw Error("empty CSV, expected header '" + header + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw Error("unexpected CSV header '" + line + "', expected '" + header + "'");
}

}  // namespace

void write_slots_csv(std::ostream& out, const ScheduleTrace& trace) {
  out << "tick,occupant,job_id\n";
  for (const SlotRecord& s : trace.slots) {
    out << s.tick << ',' << occupant_text(s.occupant) << ',' << s.job_id << '\n';
  }
}

void write_events_csv(std::ostream& out, const ScheduleTrace& trace) {
  out << "tick,kind,task_id,job_id\n";
  for (const Event& e : trace.events) {
    out << e.tick << ',' << to_string(e.kind) << ',' << occupant_text(e.task_id) << ',' << e.job_id << '\n';
  }
}

std::vector<SlotRecord> read_slots_csv(std::istream& in) {
  expect_header(in, "tick,occupant,job_id");
  std::vector<SlotRecord> slots;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != 3) throw Error("slots CSV row " + std::to_string(row) + ": expected 3 columns");
    try {
      slots.push_back({std::stoll(cells[0]), parse_occupant(cells[1]), std::stoll(cells[2])});
    } catch (const std::logic_error&) {
      throw Error("slots CSV row " + std::to_string(row) + ": malformed value");
    }
  }
  return slots;
}

std::vector<Event> read_events_csv(std::istream& in) {
  expect_header(in, "tick,kind,task_id,job_id");
  std::vector<Event> events;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != 4) throw Error("events CSV row " + std::to_string(row) + ": expected 4 columns");
    const auto kind = parse_event_kind(cells[1]);
    if (!kind) throw Error("events CSV row " + std::to_string(row) + ": unknown kind '" + cells[1] + "'");
    try {
      events.push_back({std::stoll(cells[0]), *kind, parse_occupant(cells[2]), std::stoll(cells[3])});
    } catch (const std::logic_error&) {
      throw Error("events CSV row " + std::to_string(row) + ": malformed value");
    }
  }
  return events;
}

}  // namespace rtsec

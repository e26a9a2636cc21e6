#include "evtrace/trace_file.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "byte_io.hpp"
#include "evtrace/wire.hpp"

namespace evtrace {

using wire::detail::ByteReader;
using wire::detail::ByteWriter;

TraceWriter::TraceWriter(std::ostream& out, const std::string& scenario_name,
                         const InstrumentConfig& config)
    : out_(out) {
  ByteWriter w(buffer_);
  w.raw(kTraceMagic.data(), kTraceMagic.size());
  w.u16(kTraceFormatVersion);
  w.str(scenario_name);
  w.str(format_config(config));
  write(buffer_);
}

void TraceWriter::write(std::span<const std::uint8_t> bytes) {
  if (failed_) return;
  out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out_) failed_ = true;
}

void TraceWriter::append(const EventMessage& msg) {
  if (failed_ || finished_) return;
  buffer_.clear();
  wire::append_event_frame(buffer_, msg);
  write(buffer_);
  if (!failed_) ++count_;
}

void TraceWriter::finish(std::span<const OverheadSample> samples) {
  if (finished_) return;
  finished_ = true;
  buffer_.clear();
  wire::append_frame(buffer_, wire::FrameKind::Bye, {});
  ByteWriter w(buffer_);
  w.u64(count_);
  w.u64(samples.size());
  for (const auto& s : samples) {
    w.u64(s.event_id);
    w.u64(s.t_total_ns);
    w.u64(s.t_capture_ns);
    w.u64(s.t_send_ns);
  }
  write(buffer_);
  if (!failed_) {
    out_.flush();
    if (!out_) failed_ = true;
  }
}

void write_trace(std::ostream& out, const TraceRecord& record) {
  TraceWriter writer(out, record.scenario_name, record.config);
  for (const auto& msg : record.events) writer.append(msg);
  writer.finish(record.samples);
  if (writer.failed()) throw TraceFileError("failed writing trace stream");
}

TraceRecord read_trace(std::istream& in) {
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  const wire::ByteView view(bytes);
  TraceRecord record;
  try {
    ByteReader header(view);
    const auto magic = header.raw(kTraceMagic.size());
    if (!std::equal(magic.begin(), magic.end(), kTraceMagic.begin())) {
      throw TraceFileError("not a trace file (bad magic)");
    }
    if (const auto version = header.u16(); version != kTraceFormatVersion) {
      throw TraceFileError("unsupported trace format version " + std::to_string(version));
    }
    record.scenario_name = header.str();
    record.config = parse_config(header.str());

    std::size_t pos = header.pos();
    while (true) {
      auto result = wire::decode_frame(view.subspan(pos), wire::PayloadCheck::HeaderOnly);
      if (std::holds_alternative<wire::NeedMore>(result)) {
        throw TraceFileError("trace truncated inside event frames at offset " + std::to_string(pos));
      }
      if (auto* bad = std::get_if<wire::Malformed>(&result)) {
        throw TraceFileError("malformed frame at offset " + std::to_string(pos + bad->offset) + ": " +
                             bad->reason);
      }
      auto& decoded = std::get<wire::Decoded>(result);
      const auto frame_start = pos;
      pos += decoded.consumed;
      if (decoded.frame.kind == wire::FrameKind::Bye) break;
      if (decoded.frame.kind != wire::FrameKind::Event) {
        throw TraceFileError("unexpected " + std::string(wire::to_string(decoded.frame.kind)) +
                             " frame at offset " + std::to_string(frame_start));
      }
      try {
        record.events.push_back(wire::decode_event(decoded.frame.payload));
      } catch (const wire::DecodeError& e) {
        throw TraceFileError("bad event at offset " +
                             std::to_string(frame_start + wire::kFrameHeaderSize + e.offset()) +
                             ": " + e.what());
      }
      if (record.events.back().id != record.events.size()) {
        throw TraceFileError("event ids not dense from 1 at event " +
                             std::to_string(record.events.size()));
      }
    }

    ByteReader footer(view.subspan(pos));
    const auto event_count = footer.u64();
    if (event_count != record.events.size()) {
      throw TraceFileError("footer declares " + std::to_string(event_count) + " events, file holds " +
                           std::to_string(record.events.size()));
    }
    const auto sample_count = footer.u64();
    if (sample_count > footer.remaining() / 32) {
      throw TraceFileError("footer sample count overruns file");
    }
    record.samples.reserve(sample_count);
    for (std::uint64_t i = 0; i < sample_count; ++i) {
      OverheadSample s;
      s.event_id = footer.u64();
      s.t_total_ns = footer.u64();
      s.t_capture_ns = footer.u64();
      s.t_send_ns = footer.u64();
      record.samples.push_back(s);
    }
    footer.expect_end("trace footer");
  } catch (const wire::DecodeError& e) {
    throw TraceFileError(std::string("corrupt trace: ") + e.what());
  } catch (const ParseError& e) {
    throw TraceFileError(std::string("corrupt trace header: ") + e.what());
  }
  return record;
}

void save_trace(const std::filesystem::path& path, const TraceRecord& record) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TraceFileError("cannot open " + path.string() + " for writing");
  write_trace(out, record);
}

TraceRecord load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceFileError("cannot open " + path.string());
  return read_trace(in);
}

}  // namespace evtrace

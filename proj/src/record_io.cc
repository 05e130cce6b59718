#include "arapipe/record_io.h"

#include <zlib.h>

#include <cstring>

#include "arapipe/error.h"

namespace arapipe::pretrain {
namespace {

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t GetU32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

std::uint64_t GetU64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

std::string Header(std::uint32_t max_seq_len, std::uint32_t max_predictions, std::uint64_t count) {
  std::string h(kRecordMagic, sizeof(kRecordMagic));
  PutU32(h, kRecordVersion);
  PutU32(h, max_seq_len);
  PutU32(h, max_predictions);
  PutU64(h, count);
  return h;
}

}  // namespace

std::uint32_t Crc32(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (!bytes.empty()) {
    const std::size_t n = std::min<std::size_t>(bytes.size(), 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(n));
    bytes.remove_prefix(n);
  }
  return static_cast<std::uint32_t>(crc);
}

std::size_t RecordSize(std::uint32_t max_seq_len, std::uint32_t max_predictions) {
  return std::size_t{max_seq_len} * 6 + std::size_t{max_predictions} * 9 + 1 + 4;
}

std::string EncodeExample(const PretrainingExample& ex, std::uint32_t max_seq_len,
                          std::uint32_t max_predictions) {
  if (ex.input_ids.size() != max_seq_len || ex.input_mask.size() != max_seq_len ||
      ex.segment_ids.size() != max_seq_len || ex.masked_lm_positions.size() != max_predictions ||
      ex.masked_lm_ids.size() != max_predictions || ex.masked_lm_weights.size() != max_predictions) {
    throw InvariantError("example shape does not match record header (" + std::to_string(max_seq_len) +
                         ", " + std::to_string(max_predictions) + ")");
  }
  std::string out;
  out.reserve(RecordSize(max_seq_len, max_predictions));
  for (auto v : ex.input_ids) PutU32(out, v);
  for (auto v : ex.input_mask) out.push_back(static_cast<char>(v));
  for (auto v : ex.segment_ids) out.push_back(static_cast<char>(v));
  for (auto v : ex.masked_lm_positions) PutU32(out, v);
  for (auto v : ex.masked_lm_ids) PutU32(out, v);
  for (auto v : ex.masked_lm_weights) out.push_back(static_cast<char>(v));
  out.push_back(static_cast<char>(ex.next_sentence_label));
  return out;
}

RecordWriter::RecordWriter(const std::string& path, std::uint32_t max_seq_len,
                           std::uint32_t max_predictions)
    : out_(path, std::ios::binary | std::ios::trunc),
      path_(path),
      max_seq_len_(max_seq_len),
      max_predictions_(max_predictions) {
  if (!out_) throw IoError("cannot open " + path + " for writing");
  const std::string header = Header(max_seq_len, max_predictions, 0);
  out_.write(header.data(), static_cast<std::streamsize>(header.size()));
}

RecordWriter::~RecordWriter() {
  if (!finished_) {
    try {
      Finish();
    } catch (...) {
    }
  }
}

void RecordWriter::Write(const PretrainingExample& ex) {
  std::string bytes = EncodeExample(ex, max_seq_len_, max_predictions_);
  PutU32(bytes, Crc32(bytes));
  out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out_) throw IoError("write failed on " + path_);
  ++count_;
}

void RecordWriter::Finish() {
  if (finished_) return;
  finished_ = true;
  std::string count_bytes;
  PutU64(count_bytes, count_);
  out_.seekp(16);
  out_.write(count_bytes.data(), 8);
  out_.close();
  if (!out_) throw IoError("write failed on " + path_);
}

RecordReader::RecordReader(const std::string& path) : in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open " + path);
  in_.seekg(0, std::ios::end);
  file_size_ = static_cast<std::uint64_t>(in_.tellg());
  in_.seekg(0);
  char header[kRecordHeaderSize];
  if (file_size_ < kRecordHeaderSize || !in_.read(header, kRecordHeaderSize)) {
    throw OffsetError("truncated record header", file_size_);
  }
  if (std::memcmp(header, kRecordMagic, 4) != 0) throw OffsetError("bad magic (expected ABPD)", 0);
  if (const auto version = GetU32(header + 4); version != kRecordVersion) {
    throw OffsetError("unsupported record version " + std::to_string(version), 4);
  }
  max_seq_len_ = GetU32(header + 8);
  max_predictions_ = GetU32(header + 12);
  count_ = GetU64(header + 16);
  offset_ = kRecordHeaderSize;
  const std::uint64_t body = file_size_ - kRecordHeaderSize;
  const std::uint64_t record = RecordSize(max_seq_len_, max_predictions_);
  if (body != count_ * record) {
    if (body < count_ * record) {
      throw OffsetError("truncated file: header declares " + std::to_string(count_) + " examples", file_size_);
    }
    throw OffsetError("example count mismatch: trailing bytes after " + std::to_string(count_) + " examples",
                      kRecordHeaderSize + count_ * record);
  }
}

std::optional<PretrainingExample> RecordReader::Next() {
  if (read_ == count_) return std::nullopt;
  const std::size_t size = RecordSize(max_seq_len_, max_predictions_);
  std::string bytes(size, '\0');
  if (!in_.read(bytes.data(), static_cast<std::streamsize>(size))) {
    throw OffsetError("truncated example", offset_);
  }
  const std::uint32_t stored = GetU32(bytes.data() + size - 4);
  if (Crc32(std::string_view(bytes).substr(0, size - 4)) != stored) {
    throw OffsetError("checksum mismatch in example " + std::to_string(read_), offset_);
  }
  const std::size_t L = max_seq_len_, P = max_predictions_;
  const char* p = bytes.data();
  PretrainingExample ex;
  ex.input_ids.resize(L);
  for (auto& v : ex.input_ids) v = GetU32(p), p += 4;
  ex.input_mask.assign(p, p + L), p += L;
  ex.segment_ids.assign(p, p + L), p += L;
  ex.masked_lm_positions.resize(P);
  for (auto& v : ex.masked_lm_positions) v = GetU32(p), p += 4;
  ex.masked_lm_ids.resize(P);
  for (auto& v : ex.masked_lm_ids) v = GetU32(p), p += 4;
  ex.masked_lm_weights.assign(p, p + P), p += P;
  ex.next_sentence_label = static_cast<std::uint8_t>(*p);
  offset_ += size;
  ++read_;
  return ex;
}

void WriteRecordFile(const std::string& path, const std::vector<PretrainingExample>& examples,
                     std::uint32_t max_seq_len, std::uint32_t max_predictions) {
  RecordWriter writer(path, max_seq_len, max_predictions);
  for (const auto& ex : examples) writer.Write(ex);
  writer.Finish();
}

std::vector<PretrainingExample> ReadRecordFile(const std::string& path) {
  RecordReader reader(path);
  std::vector<PretrainingExample> out;
  while (auto ex = reader.Next()) out.push_back(std::move(*ex));
  return out;
}

}  // namespace arapipe::pretrain

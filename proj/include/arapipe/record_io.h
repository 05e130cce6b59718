#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>

#include "arapipe/pretrain.h"

namespace arapipe::pretrain {

// Little-endian record file:
//   "ABPD" | u32 version | u32 max_seq_len | u32 max_predictions | u64 count
//   per example: input_ids L*u32, input_mask L*u8, segment_ids L*u8,
//                masked_lm_positions P*u32, masked_lm_ids P*u32,
//                masked_lm_weights P*u8, next_sentence_label u8,
//                crc32 of the preceding example bytes u32
inline constexpr char kRecordMagic[4] = {'A', 'B', 'P', 'D'};
inline constexpr std::uint32_t kRecordVersion = 1;
inline constexpr std::size_t kRecordHeaderSize = 24;

std::size_t RecordSize(std::uint32_t max_seq_len, std::uint32_t max_predictions);

/// Serializes one example (without the checksum).
std::string EncodeExample(const PretrainingExample& ex, std::uint32_t max_seq_len,
                          std::uint32_t max_predictions);

class RecordWriter {
 public:
  RecordWriter(const std::string& path, std::uint32_t max_seq_len, std::uint32_t max_predictions);
  RecordWriter(const RecordWriter&) = delete;
  RecordWriter& operator=(const RecordWriter&) = delete;
  ~RecordWriter();

  void Write(const PretrainingExample& ex);
  /// Patches the example count into the header and closes the file.
  void Finish();
  std::uint64_t count() const { return count_; }

 private:
  std::ofstream out_;
  std::string path_;
  std::uint32_t max_seq_len_;
  std::uint32_t max_predictions_;
  std::uint64_t count_ = 0;
  bool finished_ = false;
};

/// Reads and verifies a record file. Errors carry the byte offset.
class RecordReader {
 public:
  explicit RecordReader(const std::string& path);

  std::uint32_t max_seq_len() const { return max_seq_len_; }
  std::uint32_t max_predictions() const { return max_predictions_; }
  std::uint64_t count() const { return count_; }

  /// Next example, or nullopt after the last one (trailing bytes are an error).
  std::optional<PretrainingExample> Next();

 private:
  std::ifstream in_;
  std::uint64_t file_size_ = 0;
  std::uint64_t offset_ = 0;
  std::uint32_t max_seq_len_ = 0;
  std::uint32_t max_predictions_ = 0;
  std::uint64_t count_ = 0;
  std::uint64_t read_ = 0;
};

void WriteRecordFile(const std::string& path, const std::vector<PretrainingExample>& examples,
                     std::uint32_t max_seq_len, std::uint32_t max_predictions);
std::vector<PretrainingExample> ReadRecordFile(const std::string& path);

std::uint32_t Crc32(std::string_view bytes);

}  // namespace arapipe::pretrain

#pragma once

#include <fstream>
#include <string>
#include <vector>

// Deterministic CSV emission: every file starts with a header row, floats
// carry 17 significant digits (round-trip exact for IEEE doubles), and the
// byte stream depends only on the values written, so identical runs produce
// bitwise-identical artifacts.  Trailing comment lines (prefixed '#') carry
// row-shaped annotations such as boundary events.
namespace exbound {

// "%.17g" rendering; the shortest representation is not used on purpose so
// that equal doubles always produce equal text.
std::string format_double(double v);

class CsvWriter {
  public:
    // Opens (truncates) the file in binary mode; throws std::runtime_error
    // when the file cannot be created.
    CsvWriter(const std::string& path, const std::vector<std::string>& header);

    // One value per call; end_row() terminates the record with '\n'.
    CsvWriter& field(const std::string& text);
    CsvWriter& field(double v);
    CsvWriter& field(int v);
    void end_row();

    // Convenience: a full row of already-formatted cells.
    void row(const std::vector<std::string>& cells);

    // Footer annotation: "# cell,cell,...".
    void comment_row(const std::vector<std::string>& cells);

    // Flushes and closes; throws std::runtime_error if the stream failed.
    void close();

    ~CsvWriter();

    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

  private:
    void raw(const std::string& text);

    std::string path_;
    std::ofstream out_;
    bool row_open_ = false;
    bool closed_ = false;
};

}  // namespace exbound

// Writes the bundled demo dataset: 50 synthetic tutoring transcripts, human
// labels, a second rater for the agreement command, and mock-provider
// fixtures that replay a full "gpt-4" run offline.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fixture_data.hpp"

int main(int argc, char** argv) {
  CLI::App app{"write the demo tutoring dataset"};
  std::string out = "demo";
  app.add_option("--out", out, "output directory");
  CLI11_PARSE(app, argc, argv);

  try {
    tutoreval::demo::write_dataset(out);
  } catch (const tutoreval::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cout << "demo dataset written to " << out << "\n"
            << "  corpus/      50 transcripts\n"
            << "  labels.csv   human labels (praise, errors)\n"
            << "  rater_a.csv  second coder, praise only\n"
            << "  rater_b.csv  second coder, praise only\n"
            << "  fixtures.json  canned gpt-4 responses for --model mock:gpt-4\n";
  return 0;
}

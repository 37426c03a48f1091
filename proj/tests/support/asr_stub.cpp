// Deterministic stand-in for a speech recognizer.
// usage: asr_stub TEXT [SLEEP_MS]
// Reads a WAV path from stdin and prints {"text": TEXT}; exits 3 if the file
// is not a RIFF/WAVE file.
#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: asr_stub TEXT [SLEEP_MS]\n";
    return 2;
  }
  std::string path;
  std::getline(std::cin, path);
  std::ifstream in(path, std::ios::binary);
  char header[12] = {};
  in.read(header, sizeof header);
  if (!in || std::string(header, 4) != "RIFF" || std::string(header + 8, 4) != "WAVE") return 3;
  if (argc > 2) std::this_thread::sleep_for(std::chrono::milliseconds(std::stoi(argv[2])));
  std::cout << nlohmann::json{{"text", argv[1]}}.dump() << "\n";
  return 0;
}

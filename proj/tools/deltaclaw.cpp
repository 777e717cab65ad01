#include <deltaclaw/cli.hpp>

int main(int argc, char** argv) { return deltaclaw::cli::run(argc, argv); }

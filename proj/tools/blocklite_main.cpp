#include "cli.hpp"

int main(int argc, char** argv) { return blocklite::cli::run(argc, argv); }

#include "commands.hpp"

int main(int argc, char** argv) { return pcfuzz::cli::run(argc, argv); }

#include "beatfcos/cli.hpp"

int main(int argc, char** argv) { return beatfcos::cli::dispatch(argc, argv); }

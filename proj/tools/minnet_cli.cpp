#include "minnet/io.hpp"

int main(int argc, char** argv) { return minnet::run(argc, argv); }

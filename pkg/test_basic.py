#!/usr/bin/env python3
"""
Basic test script for RainbowRadar components.
Run this to verify everything is working before starting long experiments.
"""

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from settings import settings
from geometry.probability import pair_adjacency_probability
from graph.multilayer import GraphParams, generate_random
from graph.fixtures import figure1_graph
from rainbow.engine import rainbow_engine
from analysis.formulas import threshold_radius, theorem_constants
from analysis.estimation import estimate_rainbow_probability


def test_settings():
    """Test runtime settings."""
    print("🔧 Testing settings...")
    assert settings.simulation.bit_rows_max_n == 65536
    assert settings.output.float_format == "%.17g"
    print(f"✅ Memory budget: {settings.simulation.memory_budget_bytes} bytes")


def test_generator():
    """Test graph generation."""
    print("\n📊 Testing graph generator...")
    g = generate_random(GraphParams(200, 0.1, 2), seed=42)
    assert g.n == 200 and g.h == 2
    print(f"✅ Generated {g!r}")


def test_rainbow_engine():
    """Test rainbow connectivity on the bundled fixture."""
    print("\n🎯 Testing rainbow engine...")
    g = figure1_graph()
    connected, failure = rainbow_engine.verdict(g)
    assert not connected
    assert failure == (0, 5)
    print(f"✅ Fixture not rainbow connected, first failure ({g.label(0)},{g.label(5)})")


def test_formulas():
    """Test closed-form formulas."""
    print("\n📐 Testing formulas...")
    assert abs(threshold_radius(10 ** 6, 2) - 0.06096) < 1e-4
    assert theorem_constants(2).b_lower == 0.68
    assert abs(pair_adjacency_probability(0.1) - 0.0287993) < 1e-6
    print("✅ Threshold radius, constants and pair probability agree")


def test_estimation():
    """Test a tiny Monte Carlo estimate."""
    print("\n🎲 Testing estimation...")
    estimate = estimate_rainbow_probability(30, 0.5, 2, trials=10, seed=7, workers=1)
    assert 0 <= estimate.successes <= estimate.trials
    assert estimate.ci_low <= estimate.p_hat <= estimate.ci_high
    print(f"✅ p_hat={estimate.p_hat:.3f} [{estimate.ci_low:.3f}, {estimate.ci_high:.3f}]")


def main():
    """Run all tests."""
    print("🚀 RainbowRadar Basic Test Suite\n")

    tests = [
        ("Settings", test_settings),
        ("Generator", test_generator),
        ("Rainbow Engine", test_rainbow_engine),
        ("Formulas", test_formulas),
        ("Estimation", test_estimation),
    ]

    results = []
    for test_name, test_func in tests:
        try:
            test_func()
            results.append((test_name, True))
        except Exception as e:
            print(f"❌ {test_name} test failed: {e}")
            results.append((test_name, False))

    # Summary
    print("\n📋 Test Results:")
    print("=" * 50)

    passed = 0
    for test_name, success in results:
        status = "✅ PASS" if success else "❌ FAIL"
        print(f"{test_name:20} {status}")
        if success:
            passed += 1

    print(f"\n🎯 {passed}/{len(results)} tests passed")

    if passed == len(results):
        print("\n🎉 All tests passed! RainbowRadar is ready to run.")
        print("\nNext steps:")
        print("1. Run: python src/main.py fixture")
        print("2. Run: python src/main.py check --fixture")
    else:
        print("\n⚠️  Some tests failed. Check the errors above.")

    return passed == len(results)


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""
Streamlit Web UI for scl-entropy
Run an entropy scan from the sidebar and inspect the per-eps bounds.
"""

import streamlit as st
import asyncio
import json
import math
import os
import sys
from datetime import datetime

from scl_entropy import ConfigError, ExperimentConfig, entropy_scan_async
from scl_entropy.config_helpers import (
    create_burgers_flux_spec,
    create_monomial_flux_spec,
    example_burgers_scan,
    example_cubic_scan,
)
from scl_entropy.experiments import default_eps_grid
from scl_entropy.utils import format_duration, report_rows_for_display, validate_experiment_config

# Page configuration
st.set_page_config(
    page_title="SCL Entropy Explorer",
    page_icon="📈",
    layout="wide",
    initial_sidebar_state="expanded"
)

EXAMPLE_CONFIG_PATH = "example_docs/example_scan_config.json"


def flux_choice():
    """Flux selector; returns a flux specification or None when the JSON is invalid."""
    st.subheader("🔧 Flux")
    choice = st.selectbox(
        "Flux",
        ["burgers", "cubic", "quartic", "mixed", "monomial", "custom JSON"],
        help="Registered fluxes or an explicit polynomial specification"
    )
    if choice == "burgers":
        return create_burgers_flux_spec()
    if choice == "monomial":
        m = st.number_input("Order m", min_value=1, max_value=8, value=2)
        mirrored = st.checkbox("Mirrored (-u^(m+1)/(m+1))", disabled=(m % 2 == 1))
        return create_monomial_flux_spec(int(m), mirrored=mirrored)
    if choice == "custom JSON":
        default = '{"kind": "NonConvexInflection", "m": 2, "coeffs": [0, 0, 0, 0.3333333333333333]}'
        if os.path.exists("example_docs/example_flux_cubic.json"):
            with open("example_docs/example_flux_cubic.json", "r", encoding="utf-8") as f:
                default = f.read()
        text = st.text_area("Flux specification", value=default, height=160)
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            st.error(f"❌ Invalid JSON: {e}")
            return None
    return {"name": choice}


def build_config():
    """Sidebar form; returns a config dictionary or None."""
    preset = st.radio("Start from", ["Manual", "Burgers example", "Cubic example", "Example file"])
    if preset == "Burgers example":
        return example_burgers_scan()
    if preset == "Cubic example":
        return example_cubic_scan()
    if preset == "Example file":
        if not os.path.exists(EXAMPLE_CONFIG_PATH):
            st.error(f"❌ {EXAMPLE_CONFIG_PATH} not found")
            return None
        with open(EXAMPLE_CONFIG_PATH, "r", encoding="utf-8") as f:
            return json.load(f)

    flux = flux_choice()
    if flux is None:
        return None
    st.subheader("📐 Problem")
    col1, col2, col3 = st.columns(3)
    with col1:
        L = st.number_input("L", min_value=0.01, value=2.0)
    with col2:
        M = st.number_input("M", min_value=0.01, value=1.0)
    with col3:
        T = st.number_input("T", min_value=0.01, value=1.0)

    st.subheader("🎲 Sampling")
    samples = st.slider("Samples", min_value=2, max_value=200, value=30)
    pieces = st.slider("Cells per datum", min_value=1, max_value=32, value=8)
    seed = st.number_input("Seed", min_value=0, value=0)
    sign = st.selectbox("Sign constraint", ["none", "NonNegative", "NonPositive"])

    st.subheader("📏 eps grid")
    default_grid = ", ".join(f"{e:.6g}" for e in default_eps_grid(L, M))
    grid_text = st.text_input("Descending eps values", value=default_grid)
    try:
        eps_grid = [float(v) for v in grid_text.split(",") if v.strip()]
    except ValueError:
        st.error("❌ eps values must be numbers")
        return None

    return {
        "flux": flux,
        "L": L,
        "M": M,
        "T": T,
        "eps_grid": eps_grid,
        "samples": int(samples),
        "pieces": int(pieces),
        "seed": int(seed),
        "sign": None if sign == "none" else sign,
    }


def create_progress_callback(progress_bar, status_text):
    """Progress callback that updates the Streamlit bar and logs to the terminal"""
    def progress_callback(message, current, total):
        fraction = current / total
        progress_bar.progress(fraction, text=f"Progress: {current}/{total} ({fraction * 100:.1f}%)")
        status_text.text(f"🔄 {message}")
        print(f"Progress: {fraction * 100:.1f}% ({current}/{total}) {message}")
        sys.stdout.flush()

    return progress_callback


def display_report(report):
    """Metrics, per-eps table, slopes and downloads"""
    st.subheader("📊 Scan Summary")
    col1, col2, col3, col4 = st.columns(4)
    with col1:
        st.metric("Rows", len(report.rows))
    with col2:
        st.metric("Samples", report.metadata["config"]["samples"])
    with col3:
        st.metric("Flux kind", report.metadata["kind"])
    with col4:
        st.metric("Consistent", "yes" if report.consistent else "no")

    st.subheader("📋 Bounds per eps (log2 counts)")
    st.dataframe(report_rows_for_display(report), use_container_width=True)

    st.subheader("📈 Fitted slopes vs log(1/eps)")
    slope_cols = st.columns(len(report.slopes))
    for col, (name, slope) in zip(slope_cols, report.slopes.items()):
        with col:
            st.metric(name, "n/a" if not math.isfinite(slope) else f"{slope:.3f}")

    notes = [(row.eps, note) for row in report.rows for note in row.notes]
    if notes:
        with st.expander(f"⚠️ {len(notes)} notes", expanded=False):
            for eps, note in notes:
                st.write(f"eps = {eps:.4g}: {note}")

    with st.expander("🔢 Flux constants", expanded=False):
        st.json(report.metadata["constants"])

    st.subheader("💾 Download")
    stamp = datetime.now().strftime('%Y%m%d_%H%M%S')
    col1, col2 = st.columns(2)
    with col1:
        st.download_button(
            label="📥 Download CSV",
            data=report.to_csv(),
            file_name=f"entropy_scan_{stamp}.csv",
            mime="text/csv",
        )
    with col2:
        st.download_button(
            label="📥 Download JSON",
            data=json.dumps(report.to_dict(), indent=2, ensure_ascii=False),
            file_name=f"entropy_scan_{stamp}.json",
            mime="application/json",
        )


def main():
    """Main Streamlit app"""
    st.title("📈 SCL Entropy Explorer")
    st.markdown("**Empirical, constructive and analytic epsilon-entropy bounds for scalar conservation laws**")

    with st.sidebar:
        st.header("⚙️ Scan Options")
        config_dict = build_config()
        st.divider()
        st.subheader("ℹ️ About")
        st.write("Random step-function data on [-L, L] are evolved to time T by front tracking.")
        st.write("• Packing / cover: greedy counts over the sample")
        st.write("• Witness: certified lower bound from the tooth family")
        st.write("• Upper / lower: closed-form bounds at unit constants")

    if config_dict is None:
        st.info("👈 Fix the configuration in the sidebar")
        return

    is_valid, error_msg = validate_experiment_config(config_dict)
    if not is_valid:
        st.error(f"❌ Invalid configuration: {error_msg}")
        return

    with st.expander("View configuration", expanded=False):
        st.json(config_dict)

    if st.button("🚀 Run entropy scan", type="primary", use_container_width=True):
        try:
            config = ExperimentConfig.from_dict(config_dict)
        except ConfigError as e:
            st.error(f"❌ {e}")
            return
        progress_bar = st.progress(0.0, text="Initializing...")
        status_text = st.empty()
        try:
            report = asyncio.run(
                entropy_scan_async(config, progress_callback=create_progress_callback(progress_bar, status_text))
            )
        except Exception as e:
            st.error(f"❌ Scan failed: {e}")
            st.exception(e)
            return
        progress_bar.progress(1.0, text="✅ Scan completed!")
        status_text.text("🎉 Done")
        st.success(f"🎉 Scan finished in {format_duration(report.metadata['processing_time_seconds'])}")
        display_report(report)
    else:
        st.info("👆 Configure the scan in the sidebar and press Run")


if __name__ == "__main__":
    main()

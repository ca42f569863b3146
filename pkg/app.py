"""
Main Gradio application for the epinet explorer.
"""
import logging

import gradio as gr

from core.database import init_database
from ui.analytics import create_analytics
from ui.dashboard import create_dashboard
from utils.logging import setup_logging

logger = logging.getLogger(__name__)


def build_app() -> gr.Blocks:
    with gr.Blocks(title="Epinet Explorer", theme=gr.themes.Soft()) as demo:
        gr.Markdown("# Epinet Explorer")
        gr.Markdown("Run epistemic network scenarios and map who knows what")

        with gr.Tabs():
            with gr.Tab("Scenario Runner"):
                create_dashboard()

            with gr.Tab("Knowledge Map"):
                create_analytics()
    return demo


def main():
    """Initialize and launch the Gradio application."""
    setup_logging(verbose=False)
    init_database()
    logger.warning("launching explorer on http://localhost:7860")

    build_app().launch(
        server_name="0.0.0.0",
        server_port=7860,
        share=False,
        debug=False,
        show_error=True
    )


if __name__ == "__main__":
    main()

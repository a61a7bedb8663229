from .csvlog import CsvAppender, csv_append, header_for_shape
from .triggers import Comparator, TriggerEvent, TriggerSpec, TriggerState, trigger_eval
from .webhook import DeliveryResult, WebhookQueue, webhook_fire
from .plots import PlotSpec, hist_ci_stats, plot_hist_ci, plot_x_by_time, plot_xy_by_time

__all__ = [
    "CsvAppender", "csv_append", "header_for_shape",
    "Comparator", "TriggerEvent", "TriggerSpec", "TriggerState", "trigger_eval",
    "DeliveryResult", "WebhookQueue", "webhook_fire",
    "PlotSpec", "hist_ci_stats", "plot_hist_ci", "plot_x_by_time", "plot_xy_by_time",
]

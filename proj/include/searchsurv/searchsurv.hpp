#pragma once

#include "searchsurv/config.hpp"
#include "searchsurv/dataset.hpp"
#include "searchsurv/elastic_net.hpp"
#include "searchsurv/errors.hpp"
#include "searchsurv/feature_impact.hpp"
#include "searchsurv/forecasting.hpp"
#include "searchsurv/gp.hpp"
#include "searchsurv/io.hpp"
#include "searchsurv/news_adjustment.hpp"
#include "searchsurv/pipeline.hpp"
#include "searchsurv/svg.hpp"
#include "searchsurv/synthetic.hpp"
#include "searchsurv/timeseries.hpp"
#include "searchsurv/transfer.hpp"
#include "searchsurv/unsupervised.hpp"

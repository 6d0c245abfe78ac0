#pragma once

#include "senseloom/annotate.hpp"
#include "senseloom/annotate_service.hpp"
#include "senseloom/apportion.hpp"
#include "senseloom/corpus.hpp"
#include "senseloom/embedstore.hpp"
#include "senseloom/error.hpp"
#include "senseloom/gold.hpp"
#include "senseloom/io.hpp"
#include "senseloom/lift.hpp"
#include "senseloom/numerics.hpp"
#include "senseloom/random.hpp"
#include "senseloom/segment.hpp"
#include "senseloom/utf8.hpp"
#include "senseloom/wicbuilder.hpp"
#include "senseloom/wiceval.hpp"
